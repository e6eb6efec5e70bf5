import numpy as np
import pytest

from repeatdist import dist as D
from repeatdist.errors import CapacityError, DomainError
from repeatdist.markov import (
    MarkovOperator,
    eigen_expansion,
    geometric_markov_matrix,
    markov_apply,
    markov_eigen_checks,
    markov_mean_condition_residual,
    markov_reversibility_residual,
    read_markov,
    write_markov,
)


def test_geometric_matrix_fixes_geometric():
    M = geometric_markov_matrix(0.5, 100)
    g = D.geometric(0.5, 100)
    once = markov_apply(M, g)
    assert np.max(np.abs(once.probs - g.probs)) < 1e-15
    assert once.is_normalized()


def test_idempotent_and_null_vectors():
    M = geometric_markov_matrix(0.3, 40)
    # truncated columns carry mass 1 - deficit, so M^2 = (1 - deficit) M exactly
    assert np.max(np.abs(M.entries @ M.entries - M.entries * (1 - M.column_deficit))) < 1e-15
    big = geometric_markov_matrix(0.5, 100)
    assert np.max(np.abs(big.entries @ big.entries - big.entries)) < 1e-15
    for ell in (1, 7, 40):
        v = np.zeros(41)
        v[0], v[ell] = 1, -1
        assert np.max(np.abs(M.entries @ v)) == 0.0


def test_one_step_convergence_from_point_mass():
    M = geometric_markov_matrix(0.25, 80)
    p = markov_apply(M, D.CopyNumberDistribution.point_mass(17, 80))
    assert D.total_variation(p, D.geometric(0.25, 80)) < 1e-15


def test_expansion_reconstructs_vector():
    p = np.array([0.5, 0.25, 0.25])
    a = np.array([0.1, 0.7, 0.2])
    assert np.allclose(eigen_expansion(a, p), a, atol=1e-16)


def test_eigen_report():
    rep = markov_eigen_checks(geometric_markov_matrix(0.5, 100), 0.5)
    assert rep.passed
    d = rep.to_dict()
    assert d["passed"] and d["cap"] == 100


def test_mean_condition_and_reversibility():
    M = geometric_markov_matrix(0.5, 60)
    # every column has mean (1-alpha)/alpha, so only column 1 keeps its own index
    assert markov_mean_condition_residual(M) == pytest.approx(59, abs=1e-9)
    # the chain jumps straight to its stationary law, which is trivially reversible
    assert markov_reversibility_residual(M, D.geometric(0.5, 60)) == 0.0
    ident = MarkovOperator(np.eye(5), np.zeros(5))
    assert markov_mean_condition_residual(ident) == 0.0


def test_reversibility_residual_detects_cycle():
    cyc = MarkovOperator.from_matrix(np.roll(np.eye(3), 1, axis=0))
    assert markov_reversibility_residual(cyc, D.CopyNumberDistribution(np.full(3, 1 / 3))) == pytest.approx(1 / 3)


def test_validation():
    with pytest.raises(DomainError):
        MarkovOperator(np.full((2, 2), 0.6), np.zeros(2))
    with pytest.raises(DomainError):
        MarkovOperator(np.eye(2), np.zeros(3))
    with pytest.raises(CapacityError):
        markov_apply(geometric_markov_matrix(0.5, 4), D.geometric(0.5, 5))


def test_compose_and_deficit():
    M = geometric_markov_matrix(0.2, 10)
    MM = M.compose(M)
    assert np.allclose(MM.column_deficit, 1 - MM.entries.sum(axis=0))
    p = markov_apply(M, D.CopyNumberDistribution.point_mass(3, 10))
    assert p.leak == pytest.approx(0.8**11)


def test_csv_round_trip(tmp_path):
    M = geometric_markov_matrix(0.4, 12)
    write_markov(M, tmp_path / "m.csv")
    back = read_markov(tmp_path / "m.csv")
    assert np.array_equal(back.entries, M.entries)
    assert np.array_equal(back.column_deficit, M.column_deficit)
