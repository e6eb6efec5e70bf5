"""Applying recombinators and running the discrete and continuous dynamics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, astuple, fields
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .dist import (
    NORM_TOL,
    CopyNumberDistribution,
    centered_moment,
    mean,
    total_variation,
)
from .errors import DomainError
from .kernels import ModelKind, Variant, kernel_values

PAIR_CUTOFF = 1e-30
LEAK_ABORT_TOL = 1e-6


# ---------------------------------------------------------------------------
# recombinator kernels on raw vectors
#
# All *_full functions take non-negative vectors of length cap+1 (or a batch
# of them for the generic path) and return the untruncated image of length
# 2*cap+1, *before* division by the l1 norm.


def _generic_full(model: ModelKind, x: np.ndarray, pair_cutoff: float = PAIR_CUTOFF) -> np.ndarray:
    """Literal pair enumeration: every (k, l) spread over all i with i+j = k+l.

    Works on a single vector or on a batch of shape (S, cap+1).  Pairs
    are grouped by their total n = k + l, and only k <= l is visited
    (the kernel is symmetric in k, l, so k < l carries weight 2).
    """
    x = np.asarray(x, dtype=np.float64)
    batch = x.reshape(-1, x.shape[-1])
    cap = batch.shape[1] - 1
    out = np.zeros((batch.shape[0], 2 * cap + 1))
    for n in range(2 * cap + 1):
        k = np.arange(max(0, n - cap), n // 2 + 1)
        l = n - k
        w = batch[:, k] * batch[:, l] * np.where(k < l, 2.0, 1.0)
        keep = np.max(w, axis=0) >= pair_cutoff if pair_cutoff > 0 else np.max(w, axis=0) > 0
        if not keep.any():
            continue
        k, l, w = k[keep], l[keep], w[:, keep]
        i = np.arange(n + 1)[:, None]
        t = kernel_values(model, i, n - i, k[None, :], l[None, :])
        out[:, : n + 1] += np.sum(w[:, None, :] * t[None, :, :], axis=2)
    return out.reshape(x.shape[:-1] + (2 * cap + 1,))


def _takahata_full(x: np.ndarray) -> np.ndarray:
    # pair sums s_n, each spread uniformly over i = 0..n -> suffix sums of s_n/(n+1)
    s = np.convolve(x, x)
    t = s / np.arange(1.0, s.size + 1.0)
    return np.cumsum(t[::-1])[::-1]


def _internal_full(x: np.ndarray) -> np.ndarray:
    # pairs (k, k+d) spread p_k p_{k+d}/(1+d) over the window k..k+d; for
    # each gap d, output i collects a window sum over k in [i-d, i]
    cap = x.size - 1
    out = np.zeros(2 * cap + 1)
    idx = np.arange(cap + 1)
    for d in range(cap + 1):
        u = x[: cap + 1 - d] * x[d:]
        if not u.any():
            continue
        prefix = np.concatenate(([0.0], np.cumsum(u)))
        lo = np.maximum(0, idx - d)
        hi = np.minimum(idx, cap - d)
        ok = lo <= hi
        c = (1.0 if d == 0 else 2.0) / (1.0 + d)
        out[: cap + 1][ok] += c * (prefix[hi[ok] + 1] - prefix[lo[ok]])
    return out


def _random_full(x: np.ndarray) -> np.ndarray:
    # each parent contributes a uniform cut position; the offspring length is
    # a sum of two independent uniforms, i.e. a self-convolution of u
    u = np.cumsum((x / np.arange(1.0, x.size + 1.0))[::-1])[::-1]
    return np.convolve(u, u)


_SPECIALIZED = {
    Variant.TAKAHATA: _takahata_full,
    Variant.INTERNAL: _internal_full,
    Variant.RANDOM: _random_full,
}


def has_specialized_path(model: ModelKind) -> bool:
    return model.resolved().variant in _SPECIALIZED


def recombine_vector(model: ModelKind, x, *, generic: bool = False,
                     pair_cutoff: float = PAIR_CUTOFF) -> np.ndarray:
    """R(x) for a non-negative vector, untruncated (length 2*cap+1)."""
    x = np.asarray(x, dtype=np.float64)
    norm = math.fsum(np.abs(x))
    if norm == 0:
        raise DomainError("empty population")
    resolved = model.resolved()
    if generic or resolved.variant not in _SPECIALIZED:
        full = _generic_full(resolved, x, pair_cutoff)
    else:
        full = _SPECIALIZED[resolved.variant](x)
    return full / norm


# ---------------------------------------------------------------------------
# steps


def apply_recombinator(model: ModelKind, p: CopyNumberDistribution, *, generic: bool = False,
                       pair_cutoff: float = PAIR_CUTOFF) -> CopyNumberDistribution:
    """One application of the recombinator; mass landing above cap joins the leak."""
    if not p.is_normalized(NORM_TOL):
        raise DomainError("input distribution is not normalized")
    full = recombine_vector(model, p.probs, generic=generic, pair_cutoff=pair_cutoff)
    overflow = math.fsum(full[p.cap + 1:])
    return CopyNumberDistribution(full[: p.cap + 1], p.leak + overflow)


def discrete_step(model: ModelKind, p: CopyNumberDistribution, **kw) -> CopyNumberDistribution:
    return apply_recombinator(model, p, **kw)


def _convex(p: CopyNumberDistribution, r: CopyNumberDistribution, h: float) -> CopyNumberDistribution:
    if h == 1.0:
        return r
    return CopyNumberDistribution((1.0 - h) * p.probs + h * r.probs, (1.0 - h) * p.leak + h * r.leak)


def euler_step(model: ModelKind, p: CopyNumberDistribution, h: float, **kw) -> CopyNumberDistribution:
    """Explicit Euler step (1-h) p + h R(p) of dp/dt = R(p) - p."""
    if not 0.0 < h <= 1.0:
        raise DomainError("h outside (0,1]")
    return _convex(p, apply_recombinator(model, p, **kw), h)


class StepMode(str, Enum):
    DISCRETE = "discrete"
    CONTINUOUS_EULER = "continuous"


@dataclass(frozen=True)
class StepPolicy:
    mode: StepMode = StepMode.DISCRETE
    h: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", StepMode(self.mode))
        if not 0.0 < self.h <= 1.0:
            raise DomainError("h outside (0,1]")

    @property
    def dt(self) -> float:
        return 1.0 if self.mode is StepMode.DISCRETE else self.h


@dataclass(frozen=True)
class TrajectoryRecord:
    """Diagnostics at one step.

    Without a target, ``dist_to_target`` holds the velocity d(R(p), p).
    """

    step: int
    time: float
    dist_to_target: float
    mean: float
    mu1: float
    mur: float
    leak: float


class Status(str, Enum):
    CONVERGED_TO_TARGET = "ConvergedToTarget"
    SELF_CONSISTENT = "SelfConsistent"
    MAX_STEPS = "MaxSteps"
    LEAK_EXCEEDED = "LeakExceeded"


class IterationResult(NamedTuple):
    final: CopyNumberDistribution
    records: list[TrajectoryRecord]
    status: Status


def iterate(model: ModelKind, p0: CopyNumberDistribution, policy: StepPolicy = StepPolicy(),
            target: CopyNumberDistribution | None = None, tol: float = 1e-10,
            max_steps: int = 10_000, *, moment_order: float = 2.0,
            leak_abort_tol: float = LEAK_ABORT_TOL, pair_cutoff: float = PAIR_CUTOFF) -> IterationResult:
    """Run the dynamics until the target (or self-consistency) is reached.

    With a target, stops once d(p, target) < tol.  Without one, stops once
    d(R(p), p) < tol; for the Euler scheme this is the velocity norm, so
    the criterion does not depend on h.  A leak above ``leak_abort_tol``
    ends the run with status LEAK_EXCEEDED rather than raising.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if not p0.is_normalized(NORM_TOL):
        raise DomainError("initial distribution is not normalized")
    if target is not None:
        target = target.resize(max(target.cap, p0.cap))
    p = p0
    records: list[TrajectoryRecord] = []
    for step in range(max_steps + 1):
        r = None
        if target is not None:
            dist = total_variation(p, target)
        else:
            r = apply_recombinator(model, p, pair_cutoff=pair_cutoff)
            dist = total_variation(r, p)
        records.append(TrajectoryRecord(
            step, step * policy.dt, dist, mean(p, warn=False), centered_moment(p, 1.0),
            centered_moment(p, moment_order), p.leak))
        if p.leak > leak_abort_tol:
            return IterationResult(p, records, Status.LEAK_EXCEEDED)
        if dist < tol:
            status = Status.CONVERGED_TO_TARGET if target is not None else Status.SELF_CONSISTENT
            return IterationResult(p, records, status)
        if step == max_steps:
            break
        if r is None:
            r = apply_recombinator(model, p, pair_cutoff=pair_cutoff)
        p = _convex(p, r, policy.dt)
    return IterationResult(p, records, Status.MAX_STEPS)


# ---------------------------------------------------------------------------
# estimators and checks


def _sample_pair(rng: np.random.Generator, cap: int, simplex: bool):
    conc = 10 ** rng.uniform(-1.3, 0.7)
    x = rng.dirichlet(np.full(cap + 1, conc))
    if rng.random() < 0.5:
        y = rng.dirichlet(np.full(cap + 1, conc))
    else:
        eps = 10 ** rng.uniform(-6, 0)
        y = (1 - eps) * x + eps * rng.dirichlet(np.full(cap + 1, conc))
    if not simplex:
        x = x * 10 ** rng.uniform(-1, 1)
        y = y * 10 ** rng.uniform(-1, 1)
    return x, y


def lipschitz_ratio_estimate(model: ModelKind, n_samples: int, restrict_to_simplex: bool = True,
                             rng_seed: int = 0, cap: int = 12) -> float:
    """Largest observed ||R(x) - R(y)||_1 / ||x - y||_1 over random pairs.

    Images are taken untruncated, so the ratio is that of the exact map
    restricted to vectors supported on 0..cap.  Equal pairs are skipped.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    pairs = [_sample_pair(rng, cap, restrict_to_simplex) for _ in range(n_samples)]
    xs = np.array([a for a, _ in pairs])
    ys = np.array([b for _, b in pairs])
    resolved = model.resolved()
    if resolved.variant in _SPECIALIZED:
        fx = np.array([recombine_vector(resolved, a) for a in xs])
        fy = np.array([recombine_vector(resolved, b) for b in ys])
    else:
        fx = _generic_full(resolved, xs, 0.0) / xs.sum(axis=1, keepdims=True)
        fy = _generic_full(resolved, ys, 0.0) / ys.sum(axis=1, keepdims=True)
    den = np.abs(xs - ys).sum(axis=1)
    num = np.abs(fx - fy).sum(axis=1)
    ok = den > 0
    return float(np.max(num[ok] / den[ok])) if ok.any() else 0.0


def specialized_vs_generic(model: ModelKind, p: CopyNumberDistribution) -> float:
    """l1 distance between the fast path and the literal pair enumeration."""
    fast = apply_recombinator(model, p)
    slow = apply_recombinator(model, p, generic=True)
    return total_variation(fast, slow)


TRAJECTORY_HEADER = [f.name for f in fields(TrajectoryRecord)]


def write_trajectory(records, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for rec in records:
            w.writerow([repr(v) for v in astuple(rec)])
