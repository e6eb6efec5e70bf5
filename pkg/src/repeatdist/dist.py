"""Truncated probability vectors on the copy numbers 0, 1, 2, ...

A distribution stores ``probs[k]`` for ``k <= cap`` and keeps whatever
mass was pushed above ``cap`` in a single aggregate ``leak`` entry, so
that ``sum(probs) + leak == 1`` for a normalized value.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, DomainError

NORM_TOL = 1e-12
LEAK_WARN_TOL = 1e-8
TAIL_WINDOW = 10


class TruncationWarning(UserWarning):
    """Leaked mass is large enough that moments are only lower bounds."""


@dataclass(frozen=True, eq=False)
class CopyNumberDistribution:
    """Immutable truncated probability vector with tail-leak accounting."""

    probs: np.ndarray
    leak: float = 0.0

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size < 2:
            raise CapacityError("probs must be 1-D with cap >= 1")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise DomainError("probabilities must be finite and non-negative")
        leak = float(self.leak)
        if not math.isfinite(leak) or leak < 0:
            raise DomainError("leak must be finite and non-negative")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "leak", leak)

    @property
    def cap(self) -> int:
        return self.probs.size - 1

    @property
    def mass(self) -> float:
        """Stored mass, leak excluded."""
        return math.fsum(self.probs)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(math.fsum([*self.probs, self.leak]) - 1.0) <= tol

    def resize(self, cap: int) -> CopyNumberDistribution:
        """Zero-pad to a larger cap, or fold entries above a smaller cap into leak."""
        if cap < 1:
            raise CapacityError("cap must be >= 1")
        if cap >= self.cap:
            probs = np.zeros(cap + 1)
            probs[: self.cap + 1] = self.probs
            return CopyNumberDistribution(probs, self.leak)
        extra = math.fsum(self.probs[cap + 1:])
        return CopyNumberDistribution(self.probs[: cap + 1], self.leak + extra)

    def __repr__(self):
        return f"CopyNumberDistribution(cap={self.cap}, mean={mean(self, warn=False):.6g}, leak={self.leak:.3g})"

    @classmethod
    def point_mass(cls, k: int, cap: int) -> CopyNumberDistribution:
        if k < 0:
            raise DomainError("copy numbers are non-negative")
        if k > cap:
            raise CapacityError(f"point mass at {k} does not fit cap={cap}")
        probs = np.zeros(cap + 1)
        probs[k] = 1.0
        return cls(probs)

    @classmethod
    def mixture(cls, weights: dict[int, float], cap: int) -> CopyNumberDistribution:
        """Finitely supported distribution from ``{copy_number: weight}``."""
        probs = np.zeros(cap + 1)
        for k, w in weights.items():
            if k < 0 or k > cap:
                raise CapacityError(f"copy number {k} outside 0..{cap}")
            probs[k] += w
        return cls(probs)


@dataclass(frozen=True)
class MomentSetSpec:
    """Target mean, moment order ``r > 1`` and bound ``C`` of a moment set."""

    mean_target: float
    order: float
    bound: float

    def __post_init__(self):
        if self.mean_target < 0:
            raise DomainError("mean_target must be >= 0")
        if not self.order > 1:
            raise DomainError("moment order must exceed 1")
        if self.bound < 0:
            raise DomainError("moment bound must be >= 0")


def _common(p: CopyNumberDistribution, q: CopyNumberDistribution):
    cap = max(p.cap, q.cap)
    return p.resize(cap), q.resize(cap)


def total_variation(p: CopyNumberDistribution, q: CopyNumberDistribution) -> float:
    """l1 distance, with the two leaks compared as one extra coordinate."""
    p, q = _common(p, q)
    return math.fsum([*np.abs(p.probs - q.probs), abs(p.leak - q.leak)])


def mean(p: CopyNumberDistribution, *, warn: bool = True) -> float:
    """Mean copy number; a lower bound when leak exceeds LEAK_WARN_TOL."""
    if warn and p.leak > LEAK_WARN_TOL:
        warnings.warn(f"leak={p.leak:.3g}: mean is a lower bound", TruncationWarning, stacklevel=2)
    return math.fsum(np.arange(p.cap + 1) * p.probs)


def centered_moment(p: CopyNumberDistribution, s: float) -> float:
    """sum_k |k - mean|^s p_k."""
    if s < 1:
        raise DomainError("moment order must be >= 1")
    m = mean(p, warn=False)
    return math.fsum(np.abs(np.arange(p.cap + 1) - m) ** s * p.probs)


def geometric(alpha: float, cap: int) -> CopyNumberDistribution:
    """p_n = alpha (1 - alpha)^n, with the exact tail (1 - alpha)^(cap+1) as leak."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    if cap < 1:
        raise CapacityError("cap must be >= 1")
    n = np.arange(cap + 1)
    return CopyNumberDistribution(alpha * (1 - alpha) ** n, (1 - alpha) ** (cap + 1))


def takahata_fixed_point(m: float, cap: int) -> CopyNumberDistribution:
    """Geometric equilibrium with mean m of the uniform-split model."""
    if m < 0:
        raise DomainError("mean must be >= 0")
    if m == 0:
        return CopyNumberDistribution.point_mass(0, cap)
    return geometric(1.0 / (m + 1.0), cap)


def internal_fixed_point(m: float, cap: int) -> CopyNumberDistribution:
    """Two-point equilibrium on floor(m), ceil(m) of the internal model."""
    if m < 0:
        raise DomainError("mean must be >= 0")
    if m > cap - 1:
        raise CapacityError(f"mean {m} needs cap >= {math.ceil(m + 1)}")
    lo = math.floor(m)
    probs = np.zeros(cap + 1)
    if lo == m:
        probs[lo] = 1.0
    else:
        probs[lo] = lo + 1 - m
        probs[lo + 1] = m - lo
    return CopyNumberDistribution(probs)


def random_fixed_point(m: float, cap: int) -> CopyNumberDistribution:
    """p_k = (2/(m+2))^2 (k+1) (m/(m+2))^k, the equilibrium of the random model."""
    if m < 0:
        raise DomainError("mean must be >= 0")
    if m == 0:
        return CopyNumberDistribution.point_mass(0, cap)
    x = m / (m + 2.0)
    c = (2.0 / (m + 2.0)) ** 2
    k = np.arange(cap + 1)
    n = cap + 1
    # closed-form tail: sum_{k>=n} c (k+1) x^k = x^n (n + 1 - n x)
    return CopyNumberDistribution(c * (k + 1) * x**k, x**n * (n + 1 - n * x))


def tail_rate_estimate(p: CopyNumberDistribution, tail_window: int = TAIL_WINDOW) -> float:
    """Largest p_k^(1/k) over the last ``tail_window`` nonzero entries with k >= 1.

    Point masses have no tail and give 0.
    """
    nz = np.flatnonzero(p.probs)
    if nz.size < 2:
        return 0.0
    nz = nz[nz >= 1][-tail_window:]
    if nz.size == 0:
        return 0.0
    return float(np.max(p.probs[nz] ** (1.0 / nz)))


def write_distribution(p: CopyNumberDistribution, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "probability"])
        for k, v in enumerate(p.probs):
            w.writerow([k, repr(float(v))])
        fh.write(f"# leak={p.leak!r}\n")


def read_distribution(path) -> CopyNumberDistribution:
    leak = 0.0
    rows: list[tuple[int, float]] = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.startswith("leak="):
                    leak = float(body[len("leak="):])
                continue
            if line.lower().startswith("k,"):
                continue
            k, v = line.split(",")
            rows.append((int(k), float(v)))
    if not rows:
        raise DomainError(f"{path}: no distribution rows")
    ks = [k for k, _ in rows]
    if ks != list(range(len(rows))):
        raise DomainError(f"{path}: rows must list k = 0..cap in order")
    return CopyNumberDistribution(np.array([v for _, v in rows]), leak)
