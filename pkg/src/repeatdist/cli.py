"""Command-line experiment runner.

Exit codes: 0 success, 1 failed check, 2 usage or validation error,
3 numerical failure (leak exceeded or no convergence).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import dist as D
from .analysis import detailed_balance_residual, solve_fixed_point_q
from .checks import run_suite
from .dynamics import (
    Status,
    StepMode,
    StepPolicy,
    apply_recombinator,
    has_specialized_path,
    iterate,
    write_trajectory,
)
from .errors import CapacityError, DomainError, NumericalFailure, RecombinationError
from .kernels import ModelKind, Variant
from .markov import geometric_markov_matrix, markov_apply, markov_eigen_checks, write_markov
from .transforms import CoefficientVector, XMetricParams, b_map, induced_step_takahata, write_coefficients, x_metric

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class ExperimentConfig:
    model: str = "takahata"
    q: float | None = None
    mean: float = 3.0
    cap: int = 200
    mode: str = "discrete"
    h: float = 1.0
    tol: float = 1e-8
    max_steps: int = 10_000
    initial: str | None = None
    output_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        self.model_kind()
        if self.mean < 0:
            raise DomainError("mean must be >= 0")
        if int(self.cap) != self.cap or self.cap < 1:
            raise CapacityError("cap must be an integer >= 1")
        StepPolicy(self.mode, self.h)
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_steps < 0:
            raise DomainError("max_steps must be >= 0")

    def model_kind(self) -> ModelKind:
        return ModelKind.parse(self.model, self.q)

    def policy(self) -> StepPolicy:
        return StepPolicy(self.mode, self.h)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def initial_distribution(spec: str | None, mean: float, cap: int) -> D.CopyNumberDistribution:
    """Parse ``delta:K``, ``geometric:ALPHA``, ``two-point:K1,K2[,W]`` or ``file:PATH``.

    Without one, a mixture of delta_0 and delta_K (K = ceil(2*mean))
    with exactly the requested mean is used.
    """
    if spec is None:
        if mean == 0:
            return D.CopyNumberDistribution.point_mass(0, cap)
        top = max(1, math.ceil(2 * mean))
        return D.CopyNumberDistribution.mixture({0: 1 - mean / top, top: mean / top}, cap)
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "delta":
        return D.CopyNumberDistribution.point_mass(int(arg), cap)
    if kind == "geometric":
        return D.geometric(float(arg), cap)
    if kind == "two-point":
        parts = [s.strip() for s in arg.split(",")]
        k1, k2 = int(parts[0]), int(parts[1])
        w = float(parts[2]) if len(parts) > 2 else 0.5
        if not 0 <= w <= 1:
            raise DomainError("two-point weight must lie in [0, 1]")
        return D.CopyNumberDistribution.mixture({k1: w, k2: 1 - w}, cap)
    if kind == "file":
        return D.read_distribution(arg).resize(cap)
    if spec.endswith(".csv"):
        return D.read_distribution(spec).resize(cap)
    raise DomainError(f"unrecognised initial condition {spec!r}")


def closed_form_fixed_point(model: ModelKind, m: float, cap: int) -> D.CopyNumberDistribution | None:
    v = model.resolved().variant
    if v is Variant.TAKAHATA:
        return D.takahata_fixed_point(m, cap)
    if v is Variant.INTERNAL:
        return D.internal_fixed_point(m, cap)
    if v is Variant.RANDOM:
        return D.random_fixed_point(m, cap)
    return None


def _dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    model = cfg.model_kind()
    p0 = initial_distribution(cfg.initial, cfg.mean, cfg.cap)
    target = closed_form_fixed_point(model, D.mean(p0), cfg.cap)
    res = iterate(model, p0, cfg.policy(), target, cfg.tol, cfg.max_steps)
    out = _outdir(cfg)
    write_trajectory(res.records, out / "trajectory.csv")
    D.write_distribution(res.final, out / "final.csv")
    _dump(cfg.to_dict(), out / "config.json")
    summary = {
        "status": res.status.value,
        "steps": len(res.records) - 1,
        "final_dist_to_target": res.records[-1].dist_to_target,
        "final_mean": D.mean(res.final, warn=False),
        "final_leak": res.final.leak,
    }
    _dump(summary, out / "summary.json")
    print(json.dumps(summary, sort_keys=True))
    if res.status in (Status.CONVERGED_TO_TARGET, Status.SELF_CONSISTENT):
        return EXIT_OK
    print(json.dumps({"error": "numerical", "type": res.status.value,
                      "message": f"stopped after {summary['steps']} steps"}), file=sys.stderr)
    return EXIT_NUMERIC


def cmd_fixed_point(cfg: ExperimentConfig, args) -> int:
    model = cfg.model_kind()
    fp = closed_form_fixed_point(model, cfg.mean, cfg.cap)
    if fp is None:
        sol = solve_fixed_point_q(model.q, cfg.mean, cfg.cap, cfg.tol, cfg.max_steps)
        fp, bound = sol.dist, 4
    else:
        bound = 20
    report = detailed_balance_residual(model, fp, bound)
    out = _outdir(cfg)
    D.write_distribution(fp, out / "fixed_point.csv")
    report.write_json(out / "balance.json")
    print(json.dumps({"mean": D.mean(fp, warn=False), "leak": fp.leak, **report.to_dict()}, sort_keys=True))
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    results = run_suite(args.suite, seed=cfg.seed)
    report = {"suite": args.suite, "passed": all(r.passed for r in results),
              "checks": [r.to_dict() for r in results]}
    _dump(report, _outdir(cfg) / "verify_report.json")
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.value:.3e} (<= {r.threshold:.3e})")
    return EXIT_OK if report["passed"] else EXIT_CHECK


def cmd_markov_demo(cfg: ExperimentConfig, args) -> int:
    alpha = args.alpha if args.alpha is not None else 1.0 / (cfg.mean + 1.0)
    M = geometric_markov_matrix(alpha, cfg.cap)
    out = _outdir(cfg)
    write_markov(M, out / "markov.csv")
    target = D.geometric(alpha, cfg.cap)
    p = initial_distribution(cfg.initial, cfg.mean, cfg.cap)
    rows = []
    for step in range(args.steps + 1):
        rows.append((step, D.total_variation(p, target), D.mean(p, warn=False), p.leak))
        p = markov_apply(M, p)
    with (out / "markov_trajectory.csv").open("w") as fh:
        fh.write("step,dist_to_fixed_point,mean,leak\n")
        for r in rows:
            fh.write(",".join(repr(v) for v in r) + "\n")
    report = markov_eigen_checks(M, alpha, rng_seed=cfg.seed)
    _dump(report.to_dict(), out / "eigen_report.json")
    print(json.dumps(report.to_dict(), sort_keys=True))
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_transform_demo(cfg: ExperimentConfig, args) -> int:
    p = initial_distribution(cfg.initial, cfg.mean, cfg.cap)
    a = b_map(p, args.K)
    m = a.alpha
    fixed = CoefficientVector(m ** np.arange(args.K + 1.0))
    params = XMetricParams(args.gamma, max(a.delta, fixed.delta, 1e-300))
    out = _outdir(cfg)
    write_coefficients(a, out / "coefficients_initial.csv")
    rows = []
    cur = a
    for step in range(args.steps + 1):
        rows.append((step, x_metric(cur, fixed, params)))
        if step < args.steps:
            cur = induced_step_takahata(cur)
    write_coefficients(cur, out / "coefficients_final.csv")
    with (out / "transform_trajectory.csv").open("w") as fh:
        fh.write("step,x_dist_to_fixed_point\n")
        for r in rows:
            fh.write(",".join(repr(v) for v in r) + "\n")
    summary = {"alpha": m, "delta": params.delta, "gamma": params.gamma,
               "contraction_bound": params.contraction_bound,
               "initial_x_dist": rows[0][1], "final_x_dist": rows[-1][1]}
    _dump(summary, out / "transform_summary.json")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_bench(cfg: ExperimentConfig, args) -> int:
    model = cfg.model_kind()
    caps = [int(c) for c in args.caps.split(",")]
    rng = np.random.default_rng(cfg.seed)
    out = _outdir(cfg)
    rows = []
    failed = False
    for cap in caps:
        p = D.CopyNumberDistribution(rng.dirichlet(np.ones(cap + 1)))
        impls = [("generic", True)] + ([("specialized", False)] if has_specialized_path(model) else [])
        ref = None
        for name, generic in impls:
            t0 = time.perf_counter_ns()
            for _ in range(args.repeat):
                r = apply_recombinator(model, p, generic=generic)
            ns = (time.perf_counter_ns() - t0) / args.repeat
            ref = r if ref is None else ref
            diff = D.total_variation(r, ref)
            failed |= diff >= 1e-12
            rows.append((str(model), cap, name, ns, diff))
    with (out / "bench.csv").open("w") as fh:
        fh.write("model,cap,impl,ns_per_apply,l1_diff_vs_generic\n")
        for m, cap, name, ns, diff in rows:
            fh.write(f"{m},{cap},{name},{ns:.0f},{diff!r}\n")
    for r in rows:
        print(f"{r[0]:>20} cap={r[1]:<5} {r[2]:<12} {r[3] / 1e6:10.3f} ms  diff={r[4]:.2e}")
    return EXIT_CHECK if failed else EXIT_OK


# ---------------------------------------------------------------------------
# argument handling

_COMMON = ("model", "q", "mean", "cap", "mode", "h", "tol", "max_steps", "seed", "initial")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config; flags override its values")
    common.add_argument("--model", help="takahata | internal | random | interpolated[:q]")
    common.add_argument("--q", type=float, help="interpolation parameter in [0, 1]")
    common.add_argument("--mean", type=float)
    common.add_argument("--cap", type=int)
    common.add_argument("--mode", choices=[m.value for m in StepMode])
    common.add_argument("--h", type=float, help="Euler step in (0, 1]")
    common.add_argument("--tol", type=float)
    common.add_argument("--max-steps", dest="max_steps", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--initial", help="delta:K | geometric:ALPHA | two-point:K1,K2[,W] | file:PATH")
    common.add_argument("--out", dest="output_dir")

    parser = argparse.ArgumentParser(prog="repeatdist", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the dynamics").set_defaults(func=cmd_simulate)
    sub.add_parser("fixed-point", parents=[common], help="closed-form or solved fixed point").set_defaults(
        func=cmd_fixed_point)
    v = sub.add_parser("verify", parents=[common], help="run property checks")
    v.add_argument("suite", nargs="?", default="all", choices=["kernels", "transforms", "markov", "dynamics", "all"])
    v.set_defaults(func=cmd_verify)
    mk = sub.add_parser("markov-demo", parents=[common], help="geometric-row Markov example")
    mk.add_argument("--alpha", type=float)
    mk.add_argument("--steps", type=int, default=3)
    mk.set_defaults(func=cmd_markov_demo)
    td = sub.add_parser("transform-demo", parents=[common], help="induced dynamics on binomial moments")
    td.add_argument("--K", type=int, default=25)
    td.add_argument("--gamma", type=float, default=0.3)
    td.add_argument("--steps", type=int, default=60)
    td.set_defaults(func=cmd_transform_demo)
    b = sub.add_parser("bench", parents=[common], help="time generic vs specialized recombinator")
    b.add_argument("--caps", default="64,128,256")
    b.add_argument("--repeat", type=int, default=3)
    b.set_defaults(func=cmd_bench)
    return parser


def resolve_config(args) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        values.update(json.loads(Path(args.config).read_text()))
    for name in (*_COMMON, "output_dir"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if args.command == "fixed-point" and "max_steps" not in values:
        values["max_steps"] = 20_000
    if values.get("mode") == StepMode.CONTINUOUS_EULER.value and "h" not in values:
        values["h"] = 0.25
    return ExperimentConfig.from_dict(values)


def _error(kind: str, exc: Exception, code: int) -> int:
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (RecombinationError, ValueError, TypeError, OSError) as exc:
        return _error("validation", exc, EXIT_USAGE)
    try:
        return args.func(cfg, args)
    except NumericalFailure as exc:
        return _error("numerical", exc, EXIT_NUMERIC)
    except (RecombinationError, ValueError, OSError) as exc:
        return _error("validation", exc, EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
