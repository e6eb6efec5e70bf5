import json
from fractions import Fraction

import numpy as np
import pytest

import oracles
from repeatdist import dist as D
from repeatdist.analysis import (
    BalanceReport,
    detailed_balance_residual,
    moment_set_membership,
    multistart_agreement,
    no_reversibility_witness,
    reversibility_recursion,
    solve_fixed_point_q,
)
from repeatdist.dynamics import apply_recombinator
from repeatdist.errors import CapacityError, DomainError, MaxStepsReached
from repeatdist.kernels import ModelKind


@pytest.mark.parametrize("model,fp", [(ModelKind.takahata(), D.takahata_fixed_point),
                                      (ModelKind.internal(), D.internal_fixed_point),
                                      (ModelKind.random(), D.random_fixed_point)], ids=str)
@pytest.mark.parametrize("m", [0.7, 2.0, 3.5])
def test_closed_forms_are_reversible(model, fp, m):
    rep = detailed_balance_residual(model, fp(m, 120), 20)
    assert rep.max_residual <= 1e-12
    assert rep.n_constraints_checked == sum((n + 1) ** 2 for n in range(21))


def test_balance_detects_non_equilibrium():
    p = D.CopyNumberDistribution.mixture({0: 0.5, 4: 0.5}, 10)
    rep = detailed_balance_residual(ModelKind.takahata(), p, 8)
    assert rep.max_residual > 0.01
    i, j, k, l = rep.argmax_tuple
    assert i + j == k + l


@pytest.mark.parametrize("q", [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)])
def test_reversibility_recursion_matches_balance_equations(q):
    p0, p1 = Fraction(1, 3), Fraction(1, 5)
    T = lambda *t: oracles.kernel("interpolated", *t, q=q)
    # balance between the outcome pairs (0, n) and (1, n-1) pins p_n given the lower entries
    p = [p0, p1]
    for n in (2, 3, 4):
        p.append(T(0, n, 1, n - 1) * p[1] * p[n - 1] / (T(1, n - 1, 0, n) * p[0]))
    got = reversibility_recursion(float(q), float(p0), float(p1))
    assert np.allclose(got, [float(v) for v in p[2:]], rtol=1e-14, atol=0)


def test_reversibility_recursion_domain():
    with pytest.raises(DomainError):
        reversibility_recursion(1.0, 0.5, 0.2)
    with pytest.raises(DomainError):
        reversibility_recursion(0.5, 0.0, 0.2)


def test_solver_endpoints():
    sol = solve_fixed_point_q(1.0, 2.0, 80)
    assert D.total_variation(sol.dist, D.random_fixed_point(2.0, 80)) < 10 * 1e-11
    sol = solve_fixed_point_q(0.0, 2.5, 80)
    assert sol.steps == 0
    assert D.total_variation(sol.dist, D.internal_fixed_point(2.5, 80)) == 0.0


@pytest.mark.parametrize("q", [0.25, 0.5, 0.75])
def test_interpolated_fixed_point_not_reversible(q):
    rep, sol = no_reversibility_witness(q, cap=80, tol=1e-11)
    assert rep.max_residual > 10 * 1e-11
    assert sol.mean_drift < 1e-10
    assert sol.dist.is_normalized()
    # still a fixed point: the defect is not an artefact of a poor solve
    assert D.total_variation(apply_recombinator(ModelKind.interpolated(q), sol.dist), sol.dist) < 1e-10


def test_solver_errors():
    with pytest.raises(CapacityError):
        solve_fixed_point_q(0.5, 30.0, 80)
    with pytest.raises(MaxStepsReached):
        solve_fixed_point_q(0.5, 2.0, 80, max_steps=3)
    with pytest.raises(DomainError):
        solve_fixed_point_q(1.5, 2.0, 80)


def test_multistart_agreement():
    starts = [D.CopyNumberDistribution.mixture({0: 0.5, 4: 0.5}, 60),
              D.CopyNumberDistribution.mixture({1: 0.75, 5: 0.25}, 60),
              D.CopyNumberDistribution.point_mass(2, 60)]
    assert multistart_agreement(0.5, 2.0, 60, starts, tol=1e-12) < 1e-9


def test_moment_set_membership():
    p = D.internal_fixed_point(2.5, 10)
    assert moment_set_membership(p, D.MomentSetSpec(2.5, 2, 0.25))
    assert not moment_set_membership(p, D.MomentSetSpec(2.5, 2, 0.2))
    assert not moment_set_membership(p, D.MomentSetSpec(2.0, 2, 10))


def test_balance_report_json(tmp_path):
    rep = detailed_balance_residual(ModelKind.interpolated(0.5), D.random_fixed_point(2, 40), 4)
    rep.write_json(tmp_path / "b.json")
    d = json.loads((tmp_path / "b.json").read_text())
    assert set(d) == {"max_residual", "argmax", "n_constraints_checked"}
    back = BalanceReport.from_dict(d)
    assert back == rep
