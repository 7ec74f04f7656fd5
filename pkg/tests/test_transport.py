"""Exact Wasserstein-1 and bounded-Lipschitz distances with their oracles."""

import numpy as np
import pytest

from flocksim.kinetic import EmpiricalMeasure
from flocksim.transport import (DiscreteMeasure, GroundMetric,
                                bl_flow_oracle, bounded_lipschitz,
                                dirac_flocking_distance, w1, w1_bruteforce)

EUC = GroundMetric("euclidean")


def dirac(*coords):
    return DiscreteMeasure(np.array([list(coords)], dtype=float),
                           np.array([1.0]))


def random_measure(rng, m, d=2):
    w = rng.random(m) + 0.1
    return DiscreteMeasure(rng.standard_normal((m, d)), w / w.sum())


def test_metric_axioms_on_sampled_triples():
    rng = np.random.default_rng(0)
    metrics = [EUC, GroundMetric("sum_of_norms", x_dim=2)]
    for metric in metrics:
        pts = rng.standard_normal((30, 4))
        dmat = metric.pairwise(pts, pts)
        assert np.allclose(dmat, dmat.T, atol=1e-12)
        assert np.allclose(np.diag(dmat), 0.0, atol=1e-12)
        for _ in range(200):
            i, j, k = rng.integers(0, 30, size=3)
            assert dmat[i, j] <= dmat[i, k] + dmat[k, j] + 1e-12


def test_w1_forced_coupling():
    value, plan = w1(dirac(0.0), dirac(3.0), EUC)
    assert value == pytest.approx(3.0)
    assert plan.cost == pytest.approx(3.0)


def test_w1_half_mass_example():
    mu = DiscreteMeasure(np.array([[0.0], [1.0]]), np.array([0.5, 0.5]))
    nu = DiscreteMeasure(np.array([[0.0], [2.0]]), np.array([0.5, 0.5]))
    value, _ = w1(mu, nu, EUC)
    assert value == pytest.approx(0.5)


def test_w1_identity():
    rng = np.random.default_rng(1)
    mu = random_measure(rng, 5)
    value, _ = w1(mu, mu, EUC)
    assert value == pytest.approx(0.0, abs=1e-12)


def test_w1_oracle_equivalence_all_small_shapes():
    rng = np.random.default_rng(2)
    metrics = [EUC, GroundMetric("sum_of_norms", x_dim=1)]
    worst = 0.0
    for m in range(1, 6):
        for n in range(1, 6):
            for _ in range(20):
                mu = random_measure(rng, m)
                nu = random_measure(rng, n)
                for metric in metrics:
                    fast, _ = w1(mu, nu, metric)
                    slow = w1_bruteforce(mu, nu, metric)
                    worst = max(worst, abs(fast - slow))
    assert worst <= 1e-9


def test_w1_plan_is_a_certificate():
    rng = np.random.default_rng(3)
    for _ in range(50):
        mu = random_measure(rng, rng.integers(2, 8))
        nu = random_measure(rng, rng.integers(2, 8))
        value, plan = w1(mu, nu, EUC)
        ma, mb = plan.marginals(mu.points.shape[0], nu.points.shape[0])
        assert np.max(np.abs(ma - mu.weights)) <= 1e-10
        assert np.max(np.abs(mb - nu.weights)) <= 1e-10
        cost = plan.recompute_cost(EUC.pairwise(mu.points, nu.points))
        assert abs(cost - value) <= 1e-10


def test_w1_metric_properties_on_random_triples():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = random_measure(rng, 4)
        b = random_measure(rng, 5)
        c = random_measure(rng, 3)
        dab, _ = w1(a, b, EUC)
        dba, _ = w1(b, a, EUC)
        dac, _ = w1(a, c, EUC)
        dcb, _ = w1(c, b, EUC)
        assert abs(dab - dba) <= 1e-10
        assert dab <= dac + dcb + 1e-9


def test_w1_assignment_fast_path_matches_simplex():
    rng = np.random.default_rng(5)
    for n in (4, 8, 16):
        pa = rng.standard_normal((n, 2))
        pb = rng.standard_normal((n, 2))
        uniform_a = DiscreteMeasure(pa, np.full(n, 1.0 / n))
        uniform_b = DiscreteMeasure(pb, np.full(n, 1.0 / n))
        fast, _ = w1(uniform_a, uniform_b, EUC)
        # break uniformity so the solver takes the simplex route
        w = np.full(n, 1.0 / n)
        eps = 1e-13
        w[0] += eps
        w[1] -= eps
        slow, _ = w1(DiscreteMeasure(pa, w), uniform_b, EUC)
        assert abs(fast - slow) <= 1e-9


def test_bruteforce_simple_cases():
    assert w1_bruteforce(dirac(0.0, 1.0), dirac(3.0, 5.0), EUC) == \
        pytest.approx(5.0)
    rng = np.random.default_rng(6)
    nu = random_measure(rng, 4, d=1)
    mu = dirac(0.0)
    expected = float(nu.weights @ np.abs(nu.points[:, 0]))
    assert w1_bruteforce(mu, nu, EUC) == pytest.approx(expected, rel=1e-12)


def test_bounded_lipschitz_examples():
    assert bounded_lipschitz(dirac(0.0), dirac(3.0), EUC) == pytest.approx(2.0)
    assert bounded_lipschitz(dirac(0.0), dirac(0.5), EUC) == pytest.approx(0.5)
    rng = np.random.default_rng(7)
    mu = random_measure(rng, 4)
    assert bounded_lipschitz(mu, mu, EUC) == pytest.approx(0.0, abs=1e-12)


def test_bounded_lipschitz_matches_flow_oracle():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(1, 5))
        mu = random_measure(rng, m)
        nu = random_measure(rng, n)
        a = bounded_lipschitz(mu, nu, EUC)
        b = bl_flow_oracle(mu, nu, EUC)
        worst = max(worst, abs(a - b))
    assert worst <= 1e-9


def test_bounded_lipschitz_dominated_by_w1_and_two():
    rng = np.random.default_rng(9)
    for _ in range(100):
        mu = random_measure(rng, int(rng.integers(1, 6)))
        nu = random_measure(rng, int(rng.integers(1, 6)))
        bl = bounded_lipschitz(mu, nu, EUC)
        wval, _ = w1(mu, nu, EUC)
        assert bl <= wval + 1e-9
        assert bl <= 2.0 + 1e-12


def test_dirac_flocking_distance():
    mu = EmpiricalMeasure(np.array([[0.0], [0.0]]),
                          np.array([[1.0], [-1.0]]), np.array([0.5, 0.5]))
    assert dirac_flocking_distance(mu, np.array([0.0]), EUC) == pytest.approx(1.0)
    aligned = EmpiricalMeasure(np.array([[1.0], [2.0]]),
                               np.array([[3.0], [3.0]]), np.array([0.5, 0.5]))
    assert dirac_flocking_distance(aligned, np.array([3.0]), EUC) == \
        pytest.approx(0.0, abs=1e-12)


def test_dirac_flocking_identity_coupling_bound():
    rng = np.random.default_rng(10)
    for _ in range(100):
        m = int(rng.integers(2, 7))
        x = rng.standard_normal((m, 2))
        v = rng.standard_normal((m, 2))
        w = rng.random(m) + 0.1
        w /= w.sum()
        mu = EmpiricalMeasure(x, v, w)
        v_ref = rng.standard_normal(2)
        d = dirac_flocking_distance(mu, v_ref, EUC)
        bound = float(w @ np.linalg.norm(v - v_ref, axis=1))
        assert d <= bound + 1e-9


def test_w1_dimension_mismatch():
    with pytest.raises(ValueError):
        w1(dirac(0.0), dirac(0.0, 1.0), EUC)
