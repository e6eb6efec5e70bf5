"""Detailed balance for the quadratic models and fixed points of the interpolated family."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dist import (
    CopyNumberDistribution,
    MomentSetSpec,
    centered_moment,
    internal_fixed_point,
    mean,
    total_variation,
)
from .dynamics import LEAK_ABORT_TOL, Status, iterate
from .errors import CapacityError, DomainError, LeakExceeded, MaxStepsReached, NumericalFailure
from .kernels import ModelKind, kernel_values


@dataclass
class BalanceReport:
    max_residual: float
    argmax_tuple: tuple[int, int, int, int]
    n_constraints_checked: int

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "argmax": list(self.argmax_tuple),
            "n_constraints_checked": self.n_constraints_checked,
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_dict(cls, d: dict) -> BalanceReport:
        return cls(float(d["max_residual"]), tuple(int(v) for v in d["argmax"]),
                   int(d["n_constraints_checked"]))


def detailed_balance_residual(model: ModelKind, p: CopyNumberDistribution, sum_bound: int) -> BalanceReport:
    """max |T[ij,kl] p_k p_l - T[kl,ij] p_i p_j| over i+j = k+l <= sum_bound."""
    pv = np.zeros(max(sum_bound, p.cap) + 1)
    pv[: p.cap + 1] = p.probs
    best, arg, count = 0.0, (0, 0, 0, 0), 0
    for n in range(sum_bound + 1):
        a = np.arange(n + 1)
        i, k = np.meshgrid(a, a, indexing="ij")
        j, l = n - i, n - k
        fwd = kernel_values(model, i, j, k, l) * pv[k] * pv[l]
        bwd = kernel_values(model, k, l, i, j) * pv[i] * pv[j]
        res = np.abs(fwd - bwd)
        count += res.size
        idx = np.unravel_index(np.argmax(res), res.shape)
        if res[idx] > best:
            best = float(res[idx])
            arg = (int(i[idx]), int(j[idx]), int(k[idx]), int(l[idx]))
    return BalanceReport(best, arg, count)


def reversibility_recursion(q: float, p0: float, p1: float) -> tuple[float, float, float]:
    """p_k = ((k+1) q / (2(k-1) + 2q)) (p1/p0) p_{k-1} for k = 2, 3, 4.

    These are the values any reversible fixed point of the interpolated
    model would be forced to take, given p0 and p1.
    """
    if not 0.0 < q < 1.0:
        raise DomainError("q must lie in (0, 1)")
    if p0 <= 0 or p1 <= 0:
        raise DomainError("p0 and p1 must be positive")
    ratio = p1 / p0
    out = []
    prev = p1
    for k in (2, 3, 4):
        prev = (k + 1) * q / (2 * (k - 1) + 2 * q) * ratio * prev
        out.append(prev)
    return tuple(out)


@dataclass
class FixedPointSolution:
    dist: CopyNumberDistribution
    steps: int
    mean_drift: float
    last_step_distance: float
    history: list = field(default_factory=list, repr=False)


def solve_fixed_point_q(q: float, mean_target: float, cap: int, tol: float = 1e-11,
                        max_steps: int = 20_000, *, initial: CopyNumberDistribution | None = None,
                        leak_abort_tol: float = LEAK_ABORT_TOL) -> FixedPointSolution:
    """Fixed point of the interpolated recombinator by direct iteration.

    Starts from the two-point internal equilibrium with the target mean
    (unless ``initial`` is given) and iterates until successive iterates
    are closer than ``tol``.  The mean is conserved by the dynamics, so
    the limit has the requested mean up to leaked mass.
    """
    if not 0.0 <= q <= 1.0:
        raise DomainError("q must lie in [0, 1]")
    if mean_target > cap / 4:
        raise CapacityError(f"mean {mean_target} needs cap >= {math.ceil(4 * mean_target)}")
    p0 = internal_fixed_point(mean_target, cap) if initial is None else initial.resize(cap)
    res = iterate(ModelKind.interpolated(q), p0, tol=tol, max_steps=max_steps,
                  leak_abort_tol=leak_abort_tol)
    if res.status is Status.LEAK_EXCEEDED:
        raise LeakExceeded(f"leak {res.final.leak:.3g} exceeded {leak_abort_tol:g}; raise cap")
    if res.status is Status.MAX_STEPS:
        raise MaxStepsReached(f"no fixed point within {max_steps} steps "
                              f"(last step distance {res.records[-1].dist_to_target:.3g})")
    # iterate() reports p together with d(R(p), p); p itself is the accepted iterate
    final = res.final
    drift = abs(mean(final, warn=False) - mean(p0, warn=False))
    return FixedPointSolution(final, len(res.records) - 1, drift, res.records[-1].dist_to_target,
                              res.records)


def no_reversibility_witness(q: float, cap: int = 80, tol: float = 1e-11, mean_target: float = 2.0,
                             max_steps: int = 20_000) -> tuple[BalanceReport, FixedPointSolution]:
    """Solve for the interpolated fixed point and measure its detailed-balance defect.

    Raises NumericalFailure if the computed fixed point has a zero entry
    within ten standard deviations of the mean.
    """
    if not 0.0 < q < 1.0:
        raise DomainError("q must lie in (0, 1)")
    sol = solve_fixed_point_q(q, mean_target, cap, tol, max_steps)
    p = sol.dist
    m = mean(p, warn=False)
    spread = math.sqrt(centered_moment(p, 2.0))
    bulk = min(p.cap, int(math.floor(m + 10 * spread)))
    if np.any(p.probs[: bulk + 1] <= 0):
        raise NumericalFailure("fixed point is not strictly positive on its bulk support")
    return detailed_balance_residual(ModelKind.interpolated(q), p, 4), sol


def moment_set_membership(p: CopyNumberDistribution, spec: MomentSetSpec, mean_tol: float = 1e-9) -> bool:
    """Mean equals the target and the centred moment of the given order is within the bound."""
    if abs(mean(p, warn=False) - spec.mean_target) > mean_tol:
        return False
    return centered_moment(p, spec.order) <= spec.bound


def multistart_agreement(q: float, mean_target: float, cap: int, starts, tol: float = 1e-11,
                         max_steps: int = 20_000) -> float:
    """Largest pairwise l1 distance between limits from several equal-mean starts."""
    limits = [solve_fixed_point_q(q, mean_target, cap, tol, max_steps, initial=s).dist for s in starts]
    return max((total_variation(a, b) for i, a in enumerate(limits) for b in limits[i + 1:]), default=0.0)
