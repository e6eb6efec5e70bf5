"""Binomial-moment coefficient maps and the induced recombinators.

``b(p)_k = sum_{l>=k} C(l, k) p_l`` are the Taylor coefficients of the
generating function of ``p`` expanded around 1.  In these coordinates
the uniform-split recombinator becomes a normalised self-convolution,
which is a contraction for the weighted metric ``x_metric``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dist import CopyNumberDistribution, tail_rate_estimate
from .dynamics import apply_recombinator
from .errors import DomainError, TransformDomainError
from .kernels import ModelKind

DEFAULT_K = 40


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Coefficients a_0..a_K together with the growth bound delta.

    ``alpha`` is always ``coeffs[1]``.  When ``delta`` is omitted the
    smallest admissible value max(alpha, max_k a_k^(1/k)) is used.
    """

    coeffs: np.ndarray
    delta: float | None = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64)
        if c.ndim != 1 or c.size < 2:
            raise DomainError("need at least a_0 and a_1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.delta is None:
            k = np.arange(2, c.size)
            growth = np.abs(c[2:]) ** (1.0 / k) if k.size else np.zeros(0)
            object.__setattr__(self, "delta", float(max(abs(c[1]), growth.max(initial=0.0))))

    @property
    def alpha(self) -> float:
        return float(self.coeffs[1])

    @property
    def K(self) -> int:
        return self.coeffs.size - 1

    def membership_violation(self, tol: float = 1e-12) -> float:
        """0 when the vector lies in the space with a_0 = 1, 0 <= a_k <= delta^k."""
        c = self.coeffs
        k = np.arange(c.size)
        bound = float(self.delta) ** k
        over = np.maximum(c - bound * (1 + tol), 0.0)
        under = np.maximum(-c, 0.0)
        return float(max(abs(c[0] - 1.0), over[2:].max(initial=0.0), under.max()))


@dataclass(frozen=True)
class XMetricParams:
    gamma: float
    delta: float

    def __post_init__(self):
        if not 0 < self.gamma < 1 / 3:
            raise DomainError("gamma must lie in (0, 1/3)")
        if not self.delta > 0:
            raise DomainError("delta must be positive")

    @property
    def contraction_bound(self) -> float:
        return 2.0 / (3.0 - 3.0 * self.gamma)


def binomial_table(n_max: int, K: int) -> np.ndarray:
    """C(l, k) for l <= n_max, k <= K as floats, built by running ratios."""
    table = np.zeros((n_max + 1, K + 1))
    for k in range(min(K, n_max) + 1):
        ell = np.arange(k + 1, n_max + 1, dtype=np.float64)
        table[k, k] = 1.0
        table[k + 1:, k] = np.cumprod(ell / (ell - k))
    return table


def b_map(p: CopyNumberDistribution, K: int = DEFAULT_K) -> CoefficientVector:
    """Binomial moments of ``p`` up to order K."""
    if tail_rate_estimate(p) >= 1:
        raise TransformDomainError("tail decays too slowly for the binomial moments")
    table = binomial_table(p.cap, K)
    coeffs = [math.fsum(table[:, k] * p.probs) for k in range(K + 1)]
    return CoefficientVector(np.array(coeffs))


def a_map(p: CopyNumberDistribution, K: int = DEFAULT_K) -> CoefficientVector:
    b = b_map(p, K).coeffs
    return CoefficientVector(b / np.arange(1.0, K + 2.0))


def inverse_b_map(a: CoefficientVector, cap: int, *, rel_tol: float = 1e-10,
                  abs_tol: float = 1e-14) -> CopyNumberDistribution:
    """Invert the binomial moments by the alternating sum.

    p_l = sum_{k>=l} (-1)^(k-l) C(k, l) a_k, truncated at K.  The sum is
    only trusted when its last retained term is negligible; otherwise a
    TransformDomainError is raised rather than returning cancellation noise.
    Coefficients of a finitely supported distribution vanish past its
    support, so for those the inversion is exact.
    """
    c = a.coeffs
    K = c.size - 1
    table = binomial_table(K, min(cap, K))
    probs = np.zeros(cap + 1)
    for ell in range(min(cap, K) + 1):
        k = np.arange(ell, K + 1)
        terms = np.where((k - ell) % 2 == 0, 1.0, -1.0) * table[ell:, ell] * c[ell:]
        val = math.fsum(terms)
        if abs(terms[-1]) >= rel_tol * abs(val) + abs_tol:
            raise TransformDomainError(
                f"alternating sum for p_{ell} has not converged at K={K} (last term {terms[-1]:.3g})")
        probs[ell] = val
    if np.any(probs < -abs_tol):
        raise TransformDomainError("reconstruction produced negative probabilities")
    probs = np.maximum(probs, 0.0)
    leak = max(0.0, 1.0 - math.fsum(probs))
    return CopyNumberDistribution(probs, leak)


def induced_step_takahata(a: CoefficientVector) -> CoefficientVector:
    """(R~ a)_k = (1/(k+1)) sum_{m<=k} a_m a_{k-m}."""
    c = a.coeffs
    conv = np.convolve(c, c)[: c.size]
    return CoefficientVector(conv / np.arange(1.0, c.size + 1.0), a.delta)


def induced_step_random(p: CopyNumberDistribution, K: int = DEFAULT_K) -> CoefficientVector:
    """a-map of the random-model image of ``p``."""
    return a_map(apply_recombinator(ModelKind.random(), p), K)


def x_metric(a: CoefficientVector, b: CoefficientVector, params: XMetricParams) -> float:
    """sum_k (gamma/delta)^k |a_k - b_k|."""
    if a.K != b.K:
        raise DomainError("coefficient vectors must share K")
    w = (params.gamma / params.delta) ** np.arange(a.K + 1)
    return math.fsum(w * np.abs(a.coeffs - b.coeffs))


def sample_coefficients(rng: np.random.Generator, alpha: float, delta: float, K: int) -> CoefficientVector:
    """Uniform draw from the truncated space a_0 = 1, a_1 = alpha, a_k in [0, delta^k]."""
    c = np.empty(K + 1)
    c[0], c[1] = 1.0, alpha
    c[2:] = rng.uniform(0.0, 1.0, K - 1) * delta ** np.arange(2, K + 1)
    return CoefficientVector(c, delta)


def contraction_ratio_estimate(params: XMetricParams, alpha: float, n_samples: int,
                               rng_seed: int = 0, K: int = DEFAULT_K) -> float:
    """Largest observed d(R~a, R~b)/d(a, b) over random pairs in the space."""
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    if not 0 < alpha <= params.delta:
        raise DomainError("need 0 < alpha <= delta")
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    for _ in range(n_samples):
        a = sample_coefficients(rng, alpha, params.delta, K)
        b = sample_coefficients(rng, alpha, params.delta, K)
        # sparsify the difference so single coordinates dominate sometimes
        if rng.random() < 0.5:
            mask = rng.random(K + 1) < 0.2
            mask[:2] = False
            b = CoefficientVector(np.where(mask, b.coeffs, a.coeffs), params.delta)
        d0 = x_metric(a, b, params)
        if d0 == 0:
            continue
        worst = max(worst, x_metric(induced_step_takahata(a), induced_step_takahata(b), params) / d0)
    return worst


def write_coefficients(a: CoefficientVector, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "coefficient"])
        for k, v in enumerate(a.coeffs):
            w.writerow([k, repr(float(v))])


def read_coefficients(path) -> CoefficientVector:
    vals = []
    with Path(path).open() as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#") or row[0] == "k":
                continue
            vals.append(float(row[1]))
    return CoefficientVector(np.array(vals))
