"""Transition kernels T[ij, kl] of the unequal-crossover models.

``T[ij, kl]`` is the probability that a pair with copy numbers (k, l)
becomes the pair (i, j).  Every kernel here is zero unless
``i + j == k + l``.  All formulas are written in terms of the sorted
index pairs (min, max), so both pair symmetries hold by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

# above 1 - Q_GUARD the normalisation constant is evaluated in factored form;
# the unfactored expression loses ~1e-12 to cancellation already at q = 0.99
Q_GUARD = 0.05


class Variant(str, Enum):
    TAKAHATA = "takahata"
    INTERNAL = "internal"
    RANDOM = "random"
    INTERPOLATED = "interpolated"


@dataclass(frozen=True)
class ModelKind:
    """Which kernel family; ``q`` is only meaningful for INTERPOLATED."""

    variant: Variant
    q: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.INTERPOLATED:
            if self.q is None or not 0.0 <= float(self.q) <= 1.0:
                raise DomainError("interpolated model needs q in [0, 1]")
            object.__setattr__(self, "q", float(self.q))
        elif self.q is not None:
            raise DomainError(f"{self.variant.value} model takes no q")

    @classmethod
    def takahata(cls):
        return cls(Variant.TAKAHATA)

    @classmethod
    def internal(cls):
        return cls(Variant.INTERNAL)

    @classmethod
    def random(cls):
        return cls(Variant.RANDOM)

    @classmethod
    def interpolated(cls, q: float):
        return cls(Variant.INTERPOLATED, q)

    @classmethod
    def parse(cls, text: str, q: float | None = None) -> ModelKind:
        """Parse ``"random"`` or ``"interpolated:0.5"`` (or name plus ``q``)."""
        name, _, qtext = text.strip().lower().partition(":")
        if qtext:
            q = float(qtext)
        try:
            variant = Variant(name)
        except ValueError:
            raise DomainError(f"unknown model {text!r}") from None
        return cls(variant, q if variant is Variant.INTERPOLATED else None)

    def resolved(self) -> ModelKind:
        """Map the interpolated endpoints q=0 and q=1 onto their closed forms."""
        if self.variant is Variant.INTERPOLATED:
            if self.q == 0.0:
                return ModelKind.internal()
            if self.q == 1.0:
                return ModelKind.random()
        return self

    def __str__(self):
        if self.variant is Variant.INTERPOLATED:
            return f"interpolated:{self.q!r}"
        return self.variant.value


def _fold_sums(q: float, m_max: int) -> np.ndarray:
    """g[m] = sum_{j<m} (m - j) q^j for m = 0..m_max (all terms positive)."""
    partial = np.cumsum(q ** np.arange(m_max + 1))
    return np.concatenate(([0.0], np.cumsum(partial)))[: m_max + 1]


def _cq(q: float, lo, hi, guard: float = Q_GUARD):
    """Vectorised normalisation constant for the interpolated kernel."""
    lo = np.asarray(lo)
    hi = np.asarray(hi)
    width = (lo + 1) * (hi - lo + 1)
    if q > 1.0 - guard:
        # (m - (m+1) q + q^(m+1)) = (1-q)^2 g[m]; dividing through removes the 0/0
        g = _fold_sums(q, int(lo.max(initial=0)))
        return 1.0 / (width + 2.0 * q * g[lo])
    omq2 = (1.0 - q) ** 2
    return omq2 / (width * omq2 + 2.0 * q * (lo - (lo + 1) * q + q ** (lo + 1.0)))


def normalization_constant_q(q: float, k: int, l: int, guard: float = Q_GUARD) -> float:
    """C^(q)_{kl} making the interpolated kernel sum to one over (i, j)."""
    if not 0.0 < q < 1.0:
        raise DomainError("q must lie in (0, 1); use the internal/random kernels at the endpoints")
    if k < 0 or l < 0:
        raise DomainError("copy numbers are non-negative")
    return float(_cq(q, min(k, l), max(k, l), guard))


def kernel_values(model: ModelKind, i, j, k, l, *, guard: float = Q_GUARD, resolve: bool = True):
    """Broadcasting evaluation of T[ij, kl] over integer arrays."""
    i, j, k, l = (np.asarray(a, dtype=np.int64) for a in (i, j, k, l))
    if resolve:
        model = model.resolved()
    conserve = (i + j) == (k + l)
    ij_lo = np.minimum(i, j)
    kl_lo = np.minimum(k, l)
    kl_hi = np.maximum(k, l)
    v = model.variant
    if v is Variant.TAKAHATA:
        val = 1.0 / (k + l + 1.0)
    elif v is Variant.INTERNAL:
        # given conservation, kl_lo <= i <= kl_hi  <=>  kl_lo <= min(i, j)
        val = np.where(ij_lo >= kl_lo, 1.0 / (1.0 + kl_hi - kl_lo), 0.0)
    elif v is Variant.RANDOM:
        val = (1.0 + np.minimum(kl_lo, ij_lo)) / ((k + 1.0) * (l + 1.0))
    else:
        q = model.q
        overhang = np.maximum(0, kl_lo - ij_lo)
        # numpy's 0.0 ** 0 == 1.0 gives the 0^0 = 1 convention at q = 0
        val = (_cq(q, kl_lo, kl_hi, guard) * (1.0 + np.minimum(kl_lo, ij_lo))
               * np.power(q, overhang.astype(np.float64)))
    return np.where(conserve & (i >= 0) & (j >= 0), val, 0.0)


def kernel_value(model: ModelKind, i: int, j: int, k: int, l: int, *, guard: float = Q_GUARD) -> float:
    if min(i, j, k, l) < 0:
        raise DomainError("copy numbers are non-negative")
    return float(kernel_values(model, i, j, k, l, guard=guard))


def check_row_sum(model: ModelKind, k: int, l: int, i_max: int | None = None) -> float:
    """|sum_{i,j <= i_max} T[ij, kl] - 1|, brute force over the full square."""
    i_max = k + l if i_max is None else i_max
    if i_max < k + l:
        raise DomainError("i_max must be >= k + l")
    i, j = np.meshgrid(np.arange(i_max + 1), np.arange(i_max + 1), indexing="ij")
    vals = kernel_values(model, i, j, k, l)
    return abs(math.fsum(vals.ravel()) - 1.0)


def check_symmetry(model: ModelKind, bound: int) -> float:
    """Largest |T[ij,kl] - T[ji,kl]| or |T[ij,kl] - T[ij,lk]| over indices <= bound."""
    if bound < 1:
        raise DomainError("bound must be >= 1")
    r = np.arange(bound + 1)
    i, j, k, l = np.meshgrid(r, r, r, r, indexing="ij", sparse=True)
    t = kernel_values(model, i, j, k, l)
    return float(max(np.max(np.abs(t - t.transpose(1, 0, 2, 3))),
                     np.max(np.abs(t - t.transpose(0, 1, 3, 2)))))


def check_conservation(model: ModelKind, k: int, l: int) -> float:
    """|sum_{i,j} i T[ij, kl] - (k + l)/2|."""
    n = k + l
    i = np.arange(n + 1)
    vals = kernel_values(model, i, n - i, k, l)
    return abs(math.fsum(i * vals) - n / 2.0)


def kernel_limit_distance(q: float, reference: ModelKind | str, bound: int) -> float:
    """max |T^(q) - T^(reference)| over tuples <= bound, with T^(q) evaluated in the open interval."""
    if not 0.0 < q < 1.0:
        raise DomainError("q must lie in (0, 1)")
    if isinstance(reference, str):
        reference = ModelKind.parse(reference)
    if reference.variant not in (Variant.INTERNAL, Variant.RANDOM):
        raise DomainError("reference must be the internal or random model")
    r = np.arange(bound + 1)
    i, j, k, l = np.meshgrid(r, r, r, r, indexing="ij", sparse=True)
    tq = kernel_values(ModelKind.interpolated(q), i, j, k, l, resolve=False)
    tr = kernel_values(reference, i, j, k, l)
    return float(np.max(np.abs(tq - tr)))
