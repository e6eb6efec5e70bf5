"""Batch property checks behind the ``verify`` command."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dist as D
from .dynamics import apply_recombinator, lipschitz_ratio_estimate, specialized_vs_generic
from .kernels import (
    ModelKind,
    check_conservation,
    check_row_sum,
    check_symmetry,
    kernel_values,
)
from .markov import (
    geometric_markov_matrix,
    markov_apply,
    markov_eigen_checks,
)
from .transforms import (
    XMetricParams,
    b_map,
    contraction_ratio_estimate,
    induced_step_takahata,
    inverse_b_map,
    x_metric,
)

Q_VALUES = (0.1, 0.5, 0.9, 0.99)


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.threshold)

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "threshold": self.threshold, "passed": self.passed}


def all_models(qs=Q_VALUES):
    return [ModelKind.takahata(), ModelKind.internal(), ModelKind.random(),
            *(ModelKind.interpolated(q) for q in qs)]


def random_geometric_tailed(rng: np.random.Generator, cap: int, support: int | None = None) -> D.CopyNumberDistribution:
    """Random distribution with a geometric envelope, supported on 0..support."""
    support = cap if support is None else support
    k = np.arange(support + 1)
    rate = rng.uniform(0.2, 0.8)
    w = rng.uniform(0.0, 1.0, support + 1) * rate**k
    probs = np.zeros(cap + 1)
    probs[: support + 1] = w / math.fsum(w)
    return D.CopyNumberDistribution(probs)


def kernel_checks(sum_bound: int = 60, sym_bound: int = 12, endpoint_bound: int = 30) -> list[CheckResult]:
    out = []
    for model in all_models():
        pairs = [(k, n - k) for n in range(sum_bound + 1) for k in range(n + 1)]
        out.append(CheckResult(f"row_sum[{model}]", max(check_row_sum(model, k, l) for k, l in pairs), 1e-12))
        out.append(CheckResult(f"conservation[{model}]",
                               max(check_conservation(model, k, l) for k, l in pairs), 1e-12))
        out.append(CheckResult(f"symmetry[{model}]", check_symmetry(model, sym_bound), 0.0))
    r = np.arange(endpoint_bound + 1)
    i, j, k, l = np.meshgrid(r, r, r, r, indexing="ij", sparse=True)
    for q, ref in ((0.0, ModelKind.internal()), (1.0, ModelKind.random())):
        diff = np.max(np.abs(kernel_values(ModelKind.interpolated(q), i, j, k, l) - kernel_values(ref, i, j, k, l)))
        out.append(CheckResult(f"endpoint[q={q}]", float(diff), 0.0))
    return out


def transform_checks(seed: int = 0, n_inputs: int = 200, K: int = 25,
                     n_pairs: int = 1000) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    takahata = ModelKind.takahata()
    for _ in range(n_inputs):
        p = random_geometric_tailed(rng, 60, support=int(rng.integers(1, 31)))
        lhs = b_map(apply_recombinator(takahata, p), K)
        rhs = induced_step_takahata(b_map(p, K))
        delta = max(lhs.delta, rhs.delta, 1.0)
        worst = max(worst, x_metric(lhs, rhs, XMetricParams(0.3, delta)))
    out = [CheckResult("convolution_identity", worst, 1e-9)]
    for gamma in (0.1, 0.2, 0.3):
        params = XMetricParams(gamma, 2.0)
        ratio = contraction_ratio_estimate(params, 1.0, n_pairs, rng_seed=seed, K=K)
        out.append(CheckResult(f"contraction[gamma={gamma}]", ratio, params.contraction_bound + 1e-9))
    trip = 0.0
    for alpha in (0.4, 0.5, 0.7, 0.9):
        p = D.geometric(alpha, 30)
        back = inverse_b_map(b_map(p, 40), 30)
        trip = max(trip, float(np.max(np.abs(back.probs - p.probs))))
    out.append(CheckResult("inverse_round_trip", trip, 1e-8))
    return out


def markov_checks(cap: int = 100, alpha: float = 0.5, seed: int = 0) -> list[CheckResult]:
    M = geometric_markov_matrix(alpha, cap)
    rep = markov_eigen_checks(M, alpha, rng_seed=seed)
    out = [
        CheckResult("markov_fixed_point", rep.fixed_point_residual, 1e-10),
        CheckResult("markov_idempotent", rep.idempotence_residual, 1e-10),
        CheckResult("markov_null_vectors", rep.max_null_residual, 1e-12),
        CheckResult("markov_expansion", rep.reconstruction_residual, 1e-10),
    ]
    rng = np.random.default_rng(seed)
    one_step = 0.0
    target = D.geometric(alpha, cap)
    for _ in range(20):
        a = D.CopyNumberDistribution(rng.dirichlet(np.full(cap + 1, 0.3)))
        once = markov_apply(M, a)
        twice = markov_apply(M, once)
        one_step = max(one_step, float(np.max(np.abs(once.probs - target.probs))),
                       float(np.max(np.abs(twice.probs - target.probs))))
    out.append(CheckResult("markov_one_step", one_step, 1e-10))
    return out


def dynamics_checks(seed: int = 0, n_lipschitz: int = 2000) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for model in all_models((0.5,)):
        drift = 0.0
        for _ in range(20):
            p = random_geometric_tailed(rng, 40, support=20)
            r = apply_recombinator(model, p)
            drift = max(drift, abs(D.mean(r, warn=False) - D.mean(p)) - (p.cap + 1) * (r.leak - p.leak))
        out.append(CheckResult(f"mean_preservation[{model}]", drift, 1e-10))
        out.append(CheckResult(f"lipschitz_simplex[{model}]",
                               lipschitz_ratio_estimate(model, n_lipschitz, True, seed), 2 + 1e-9))
        out.append(CheckResult(f"lipschitz_general[{model}]",
                               lipschitz_ratio_estimate(model, n_lipschitz, False, seed), 3 + 1e-9))
    for model in all_models(())[:3]:
        worst = 0.0
        for cap in (1, 8, 64):
            worst = max(worst, specialized_vs_generic(model, random_geometric_tailed(rng, cap)))
        out.append(CheckResult(f"fast_vs_generic[{model}]", worst, 1e-12))
    return out


SUITES = {
    "kernels": kernel_checks,
    "transforms": transform_checks,
    "markov": markov_checks,
    "dynamics": dynamics_checks,
}


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    names = list(SUITES) if name == "all" else [name]
    results = []
    for n in names:
        fn = SUITES[n]
        results.extend(fn(seed=seed) if "seed" in fn.__code__.co_varnames else fn())
    return results
