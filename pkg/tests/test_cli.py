import csv
import json

import numpy as np
import pytest

from repeatdist import dist as D
from repeatdist.cli import ExperimentConfig, initial_distribution, main
from repeatdist.errors import CapacityError, DomainError


def _run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_simulate_takahata(tmp_path, capsys):
    assert _run(tmp_path, "simulate", "--model", "takahata", "--initial", "delta:3", "--cap", "200") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary) == {"status", "steps", "final_dist_to_target", "final_mean", "final_leak"}
    assert summary["status"] == "ConvergedToTarget"
    assert summary["final_dist_to_target"] < 1e-8
    final = D.read_distribution(tmp_path / "final.csv")
    assert D.total_variation(final, D.takahata_fixed_point(3, 200)) < 1e-8
    rows = list(csv.reader((tmp_path / "trajectory.csv").open()))
    assert rows[0][:3] == ["step", "time", "dist_to_target"] and len(rows) == summary["steps"] + 2


def test_simulate_internal_two_point_limit(tmp_path):
    assert _run(tmp_path, "simulate", "--model", "internal", "--mean", "2.5", "--cap", "64") == 0
    final = D.read_distribution(tmp_path / "final.csv")
    assert final.probs[2] == pytest.approx(0.5, abs=1e-8) and final.probs[3] == pytest.approx(0.5, abs=1e-8)


def test_simulate_bad_h(tmp_path, capsys):
    assert _run(tmp_path, "simulate", "--mode", "continuous", "--h", "1.5") == 2
    err = json.loads(capsys.readouterr().err)
    assert err["message"] == "h outside (0,1]" and err["error"] == "validation"


def test_simulate_leak_exit_code(tmp_path, capsys):
    assert _run(tmp_path, "simulate", "--initial", "delta:3", "--cap", "10") == 3
    assert json.loads(capsys.readouterr().err)["type"] == "LeakExceeded"
    assert json.loads((tmp_path / "summary.json").read_text())["status"] == "LeakExceeded"


def test_simulate_max_steps_exit_code(tmp_path):
    assert _run(tmp_path, "simulate", "--max-steps", "2") == 3


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        main(["simulate", "--model", "random", "--mean", "1.5", "--cap", "60", "--out", str(out)])
    for name in ("trajectory.csv", "final.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "random", "mean": 2.0, "cap": 150, "mode": "continuous", "h": 0.25,
                               "tol": 1e-6}))
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--h", "0.5", "--out", str(out)]) == 0
    saved = json.loads((out / "config.json").read_text())
    assert saved["h"] == 0.5 and saved["model"] == "random" and saved["cap"] == 150
    assert ExperimentConfig.from_dict(saved) == ExperimentConfig(**saved)


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"modle": "random"}))
    assert main(["simulate", "--config", str(cfg)]) == 2


def test_config_validation():
    with pytest.raises(DomainError):
        ExperimentConfig(model="interpolated")
    with pytest.raises(CapacityError):
        ExperimentConfig(cap=0)
    with pytest.raises(DomainError):
        ExperimentConfig(tol=0)
    cfg = ExperimentConfig(model="interpolated", q=0.3, mean=1.25, initial="geometric:0.4")
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_initial_specs(tmp_path):
    assert initial_distribution("delta:4", 0, 10).probs[4] == 1
    assert D.mean(initial_distribution(None, 2.5, 20)) == pytest.approx(2.5)
    two = initial_distribution("two-point:1,5,0.25", 0, 10)
    assert (two.probs[1], two.probs[5]) == (0.25, 0.75)
    assert initial_distribution("geometric:0.5", 0, 30).is_normalized()
    D.write_distribution(two, tmp_path / "p.csv")
    assert np.array_equal(initial_distribution(f"file:{tmp_path / 'p.csv'}", 0, 10).probs, two.probs)
    with pytest.raises(DomainError):
        initial_distribution("uniform:3", 0, 10)


def test_fixed_point_takahata(tmp_path):
    assert _run(tmp_path, "fixed-point", "--model", "takahata", "--mean", "1", "--cap", "50") == 0
    p = D.read_distribution(tmp_path / "fixed_point.csv")
    assert np.array_equal(p.probs, 2.0 ** -(np.arange(51) + 1))
    bal = json.loads((tmp_path / "balance.json").read_text())
    assert bal["max_residual"] <= 1e-12
    assert bal["n_constraints_checked"] == sum((n + 1) ** 2 for n in range(21))


def test_fixed_point_internal(tmp_path):
    assert _run(tmp_path, "fixed-point", "--model", "internal", "--mean", "2", "--cap", "10") == 0
    assert D.read_distribution(tmp_path / "fixed_point.csv").probs[2] == 1.0


def test_fixed_point_interpolated(tmp_path):
    assert _run(tmp_path, "fixed-point", "--model", "interpolated", "--q", "0.5", "--mean", "2",
                "--cap", "80", "--tol", "1e-11") == 0
    p = D.read_distribution(tmp_path / "fixed_point.csv")
    assert np.all(p.probs[:20] > 0)
    assert json.loads((tmp_path / "balance.json").read_text())["max_residual"] > 1e-10


def test_fixed_point_solver_failure(tmp_path, capsys):
    assert _run(tmp_path, "fixed-point", "--model", "interpolated:0.5", "--mean", "2", "--cap", "80",
                "--max-steps", "2") == 3


@pytest.mark.parametrize("suite", ["kernels", "markov"])
def test_verify(tmp_path, suite):
    assert _run(tmp_path, "verify", suite) == 0
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["passed"] and report["checks"]
    assert all(c["value"] <= c["threshold"] for c in report["checks"])


def test_markov_demo(tmp_path):
    assert _run(tmp_path, "markov-demo", "--cap", "100", "--alpha", "0.5") == 0
    rows = list(csv.reader((tmp_path / "markov_trajectory.csv").open()))
    assert float(rows[2][1]) < 1e-12
    assert json.loads((tmp_path / "eigen_report.json").read_text())["passed"]
    assert (tmp_path / "markov.csv").exists()


def test_transform_demo(tmp_path):
    assert _run(tmp_path, "transform-demo", "--initial", "delta:1", "--cap", "60", "--steps", "40") == 0
    s = json.loads((tmp_path / "transform_summary.json").read_text())
    assert s["final_x_dist"] < s["initial_x_dist"] * s["contraction_bound"] ** 40 + 1e-12


def test_bench(tmp_path):
    assert _run(tmp_path, "bench", "--model", "takahata", "--caps", "1,64", "--repeat", "1") == 0
    rows = list(csv.DictReader((tmp_path / "bench.csv").open()))
    assert list(rows[0]) == ["model", "cap", "impl", "ns_per_apply", "l1_diff_vs_generic"]
    assert len(rows) == 4
    assert all(float(r["l1_diff_vs_generic"]) < 1e-12 for r in rows)
    assert _run(tmp_path, "bench", "--model", "interpolated:0.4", "--caps", "8,16", "--repeat", "1") == 0
    rows = list(csv.DictReader((tmp_path / "bench.csv").open()))
    assert [r["impl"] for r in rows] == ["generic", "generic"]


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
