"""Verdict machinery: decay, boundedness, support, stability, mean field."""

import math

import numpy as np
import pytest

from flocksim.diagnostics import (DecayEnvelope, envelope_value,
                                  fit_support_envelope, flocking_study,
                                  lipschitz_probe, meanfield_study,
                                  stability_study, verify_decay,
                                  verify_gamma_bound)
from flocksim.dynamics import IntegratorConfig, ParticleState, Trajectory, integrate
from flocksim.kinetic import (EmpiricalMeasure, InitialSpec, MomentSet,
                              from_particles, moments, sample_initial)
from flocksim.model import CouplingSpec, KernelSpec, ModelSpec, RepulsionSpec

LINEAR_1D = ModelSpec(dimension=1)


def two_body_traj(t_end=5.0, dt=0.01, stride=10):
    state = ParticleState(0.0, np.array([[0.0], [1.0]]),
                          np.array([[1.0], [0.0]]))
    config = IntegratorConfig(dt=dt, t_end=t_end, error_tol=1e-11,
                              observer_stride=stride)
    return integrate(state, LINEAR_1D, config)


def synthetic_traj(times, radii=None, gammas=None):
    """Trajectory stub carrying prescribed moment series."""
    traj = Trajectory()
    for k, t in enumerate(times):
        state = ParticleState(t, np.zeros((1, 1)), np.zeros((1, 1)))
        mm = MomentSet(V1=np.zeros(1), X1=np.zeros(1), V2=0.0, X2=0.0, Gf=0.0,
                       Gamma=0.0 if gammas is None else gammas[k],
                       support_radius=0.0 if radii is None else radii[k])
        traj.append(state, mm)
    return traj


def test_envelope_value_closed_forms():
    exp = DecayEnvelope(alpha=1.0, cstar=2.0, g0=1.0)
    assert envelope_value(exp, 0.0) == pytest.approx(1.0)
    assert envelope_value(exp, 1.0) == pytest.approx(math.exp(-2.0), rel=1e-12)
    poly = DecayEnvelope(alpha=1.2, cstar=1.0, g0=1.0)
    assert envelope_value(poly, 0.0) == pytest.approx(1.0)
    assert envelope_value(poly, 1.0) == pytest.approx(1.2 ** -5.0, rel=1e-12)


def test_verify_decay_equality_case():
    traj = two_body_traj()
    env = DecayEnvelope(alpha=1.0, cstar=2.0, g0=traj.moments[0].Gf)
    report = verify_decay(traj, env, rel_tol=1e-3)
    assert report.passed
    # equality case: observed tracks the bound, margin stays small
    for t, gf, bound in report.series:
        assert gf == pytest.approx(bound, rel=1e-5)


def test_verify_decay_adversarial_rate_fails():
    traj = two_body_traj()
    env = DecayEnvelope(alpha=1.0, cstar=4.0, g0=traj.moments[0].Gf)
    report = verify_decay(traj, env, rel_tol=1e-3)
    assert not report.passed


def test_verify_decay_zero_fluctuation():
    state = ParticleState(0.0, np.array([[0.0], [1.0]]), np.ones((2, 1)))
    config = IntegratorConfig(dt=0.1, t_end=1.0, error_tol=1e-9)
    traj = integrate(state, LINEAR_1D, config)
    env = DecayEnvelope(alpha=1.0, cstar=2.0, g0=0.0)
    assert verify_decay(traj, env, rel_tol=1e-3).passed


def test_verify_gamma_plateau_passes_on_decaying_run():
    traj = two_body_traj(t_end=20.0, dt=0.05, stride=5)
    report = verify_gamma_bound(traj, window=4.0)
    assert report.passed
    assert math.isfinite(report.details["sup_gamma"])


def test_verify_gamma_fails_on_quadratic_growth():
    times = np.linspace(0.0, 10.0, 101)
    traj = synthetic_traj(times, gammas=times ** 2)
    report = verify_gamma_bound(traj, window=2.0)
    assert not report.passed


def test_fit_support_envelope_static_state():
    times = np.linspace(0.0, 5.0, 26)
    traj = synthetic_traj(times, radii=np.full_like(times, 2.0))
    r0, c, report = fit_support_envelope(traj)
    assert report.passed
    assert r0 == pytest.approx(2.0)
    assert c <= 1e-5


def test_fit_support_envelope_two_body():
    traj = two_body_traj()
    r0, c, report = fit_support_envelope(traj)
    assert report.passed
    assert 0.0 <= c <= 10.0


def test_fit_support_envelope_superexponential_fails():
    times = np.linspace(0.0, 12.0, 61)
    traj = synthetic_traj(times, radii=np.exp(times ** 2))
    r0, c, report = fit_support_envelope(traj, c_cap=10.0)
    assert not report.passed
    assert math.isinf(c)


def test_stability_zero_perturbation_is_exactly_zero():
    spec = InitialSpec("uniform_ball", n=8, d=2, seed=2)
    config = IntegratorConfig(dt=0.05, t_end=2.0, error_tol=1e-8)
    model = ModelSpec(dimension=2)
    rows, envelope, w0 = stability_study(spec, 0.0, model, config,
                                         [0.5, 1.0, 2.0])
    assert w0 == 0.0
    assert all(wt == 0.0 for _, wt, _ in rows)


def test_stability_ratio_bounded_by_fitted_exponential():
    spec = InitialSpec("uniform_ball", n=8, d=2, seed=2)
    config = IntegratorConfig(dt=0.05, t_end=2.0, error_tol=1e-8)
    model = ModelSpec(dimension=2)
    times = [0.5, 1.0, 2.0]
    rows, envelope, w0 = stability_study(spec, 1e-3, model, config, times)
    assert w0 > 0.0
    c = max(math.log(max(r, 1e-300)) / t for t, _, r in rows)
    for t, _, ratio in rows:
        assert ratio <= math.exp(c * t) + 1e-12


def test_meanfield_single_atom_family_is_identically_zero():
    spec = InitialSpec("uniform_ball", n=4, d=2, seed=1,
                       radius_x=0.0, radius_v=0.0)
    config = IntegratorConfig(dt=0.1, t_end=0.5, error_tol=1e-8)
    table = meanfield_study(spec, [4, 8, 16], ModelSpec(dimension=2), config, 0.5)
    assert all(dist == pytest.approx(0.0, abs=1e-12)
               for _, _, dist, _ in table.rows)


def test_meanfield_initial_gap_decreases_with_n():
    spec = InitialSpec("uniform_ball", n=8, d=2, seed=4)
    config = IntegratorConfig(dt=0.1, t_end=0.0, error_tol=1e-8)
    vals = []
    nseeds = 5
    for k in range(nseeds):
        table = meanfield_study(InitialSpec("uniform_ball", n=8, d=2, seed=100 + k),
                                [16, 64, 256], ModelSpec(dimension=2), config, 0.0)
        vals.append([row[2] for row in table.rows])
    mean = np.mean(vals, axis=0)
    assert mean[1] < mean[0]


def test_flocking_series_dominated_by_sqrt_gf():
    traj = two_body_traj(t_end=3.0)
    rows = flocking_study(traj)
    for t, dist, sqrt_gf in rows:
        assert dist <= sqrt_gf + 1e-9
    assert rows[-1][1] < rows[0][1]


def test_lipschitz_probe_affine_field():
    # constant kernel, linear coupling: H(x, v) = -(v - V1), slope one in v
    rng = np.random.default_rng(5)
    mu = EmpiricalMeasure(rng.standard_normal((6, 2)),
                          rng.standard_normal((6, 2)), np.full(6, 1.0 / 6.0))
    est = lipschitz_probe(mu, ModelSpec(dimension=2), ball_radius=2.0,
                          sample_budget=4000, seed=3)
    assert est == pytest.approx(1.0, abs=0.05)
    bigger = lipschitz_probe(mu, ModelSpec(dimension=2), ball_radius=4.0,
                             sample_budget=4000, seed=3)
    assert bigger >= est - 1e-12
