"""Linear comparison: truncated column-stochastic Markov operators.

Columns index the source state, so ``M[k, l]`` is the probability of
moving from l to k and the operator acts as ``p -> M @ p``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dist import CopyNumberDistribution, geometric
from .errors import CapacityError, DomainError


@dataclass(frozen=True, eq=False)
class MarkovOperator:
    """Matrix on 0..cap plus the mass each column loses to truncation."""

    entries: np.ndarray
    column_deficit: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.float64)
        d = np.array(self.column_deficit, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or d.shape != (m.shape[0],):
            raise DomainError("need a square matrix and one deficit per column")
        if np.any(m < 0) or np.any(d < 0):
            raise DomainError("entries and deficits must be non-negative")
        sums = m.sum(axis=0) + d
        if np.max(np.abs(sums - 1.0)) > 1e-12:
            raise DomainError("columns (with deficit) must sum to one")
        m.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "column_deficit", d)

    @property
    def cap(self) -> int:
        return self.entries.shape[0] - 1

    @classmethod
    def from_matrix(cls, entries) -> MarkovOperator:
        """Deficits chosen to complete every column to one."""
        m = np.asarray(entries, dtype=np.float64)
        return cls(m, np.maximum(1.0 - m.sum(axis=0), 0.0))

    def compose(self, other: MarkovOperator) -> MarkovOperator:
        """self @ other; truncated mass of either factor is counted as deficit."""
        if self.cap != other.cap:
            raise CapacityError("operators must share cap")
        prod = self.entries @ other.entries
        return MarkovOperator(prod, np.maximum(1.0 - prod.sum(axis=0), 0.0))


def geometric_markov_matrix(alpha: float, cap: int) -> MarkovOperator:
    """Every column is the geometric distribution with parameter alpha."""
    g = geometric(alpha, cap)
    n = cap + 1
    return MarkovOperator(np.tile(g.probs[:, None], (1, n)), np.full(n, g.leak))


def markov_apply(M: MarkovOperator, p: CopyNumberDistribution) -> CopyNumberDistribution:
    if p.cap != M.cap:
        raise CapacityError("distribution and operator must share cap")
    out = np.array([math.fsum(row * p.probs) for row in M.entries])
    return CopyNumberDistribution(out, p.leak + math.fsum(M.column_deficit * p.probs))


def markov_reversibility_residual(M: MarkovOperator, p: CopyNumberDistribution) -> float:
    """max |M[k,l] p_l - M[l,k] p_k|."""
    flow = M.entries * p.probs[None, :]
    return float(np.max(np.abs(flow - flow.T)))


def markov_mean_condition_residual(M: MarkovOperator) -> float:
    """max_l |sum_k k M[k,l] - l| (zero iff every column preserves its index as mean)."""
    k = np.arange(M.cap + 1)
    col_means = np.array([math.fsum(k * col) for col in M.entries.T])
    return float(np.max(np.abs(col_means - k)))


@dataclass
class EigenReport:
    alpha: float
    cap: int
    max_null_residual: float
    worst_null_index: int
    reconstruction_residual: float
    fixed_point_residual: float
    idempotence_residual: float

    @property
    def passed(self) -> bool:
        return max(self.max_null_residual, self.reconstruction_residual,
                   self.fixed_point_residual, self.idempotence_residual) <= 1e-10

    def to_dict(self) -> dict:
        return {**self.__dict__, "passed": self.passed}


def eigen_expansion(a: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Rebuild ``a`` from beta p + sum_{l>=1} (beta p_l - a_l)(e_0 - e_l)."""
    beta = math.fsum(a)
    coef = beta * p[1:] - a[1:]
    out = beta * p.copy()
    out[0] += math.fsum(coef)
    out[1:] -= coef
    return out


def markov_eigen_checks(M: MarkovOperator, alpha: float, *, rng_seed: int = 0,
                        n_vectors: int = 20) -> EigenReport:
    """Null vectors e_0 - e_l, basis expansion, M p = p and M^2 = M for the geometric-row matrix.

    The truncated geometric vector misses ``(1-alpha)^(cap+1)`` of its
    mass; that deficit is added back to coordinate 0 of the expansion
    so that the reconstruction check measures rounding only.
    """
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    g = geometric(alpha, M.cap)
    p = g.probs
    n = M.cap + 1
    null_res = np.zeros(n)
    for ell in range(1, n):
        q = np.zeros(n)
        q[0], q[ell] = 1.0, -1.0
        null_res[ell] = np.max(np.abs(M.entries @ q))
    rng = np.random.default_rng(rng_seed)
    recon = 0.0
    for _ in range(n_vectors):
        a = rng.exponential(size=n) * rng.random(n)
        rebuilt = eigen_expansion(a, p)
        rebuilt[0] += math.fsum(a) * g.leak
        recon = max(recon, float(np.max(np.abs(rebuilt - a))))
    fixed = markov_apply(M, g)
    fixed_res = float(np.max(np.abs(fixed.probs - p)))
    idem = float(np.max(np.abs(M.entries @ M.entries - M.entries)))
    return EigenReport(alpha, M.cap, float(null_res.max()), int(np.argmax(null_res)),
                       recon, fixed_res, idem)


def write_markov(M: MarkovOperator, path) -> None:
    """Row-major CSV preceded by ``# markov cap=<n> deficit=<json list>``."""
    with Path(path).open("w") as fh:
        fh.write(f"# markov cap={M.cap} deficit={json.dumps([float(d) for d in M.column_deficit])}\n")
        for row in M.entries:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_markov(path) -> MarkovOperator:
    rows, deficit = [], None
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                if "deficit=" in line:
                    deficit = json.loads(line.split("deficit=", 1)[1])
                continue
            if line:
                rows.append([float(v) for v in line.split(",")])
    m = np.array(rows)
    if deficit is None:
        return MarkovOperator.from_matrix(m)
    return MarkovOperator(m, np.array(deficit))
