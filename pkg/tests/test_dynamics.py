"""Particle ODE right-hand side and the adaptive RK4 integrator."""

import math

import numpy as np
import pytest

from flocksim.dynamics import (IntegrationError, IntegratorConfig,
                               ParticleState, accelerations,
                               alignment_measure, integrate, step)
from flocksim.kinetic import from_particles, moments
from flocksim.model import CouplingSpec, KernelSpec, ModelSpec, RepulsionSpec

LINEAR = ModelSpec(dimension=1, kernel=KernelSpec("constant", level=1.0),
                   coupling=CouplingSpec("linear"),
                   repulsion=RepulsionSpec("zero"), alpha=1.0, phi_star=1.0)


def two_body(v0=1.0):
    return ParticleState(0.0, np.array([[0.0], [1.0]]),
                         np.array([[v0], [0.0]]))


def test_alignment_measure_two_body():
    assert alignment_measure(two_body()) == pytest.approx(0.5, rel=1e-14)


def test_alignment_measure_zero_when_aligned():
    state = ParticleState(0.0, np.random.default_rng(0).standard_normal((5, 2)),
                          np.tile([1.0, 2.0], (5, 1)))
    assert alignment_measure(state) == 0.0


def test_alignment_measure_translation_invariant():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((6, 3))
    v = rng.standard_normal((6, 3))
    a = alignment_measure(ParticleState(0.0, x, v))
    b = alignment_measure(ParticleState(0.0, x, v + np.array([3.0, -1.0, 2.0])))
    assert a == pytest.approx(b, rel=1e-14)


def test_alignment_squared_equals_velocity_fluctuation():
    rng = np.random.default_rng(2)
    for _ in range(20):
        state = ParticleState(0.0, rng.standard_normal((7, 2)),
                              rng.standard_normal((7, 2)))
        lam = alignment_measure(state)
        gf = moments(from_particles(state)).Gf
        assert lam * lam == pytest.approx(gf, rel=1e-12, abs=1e-15)


def test_accelerations_two_body():
    acc = accelerations(two_body(), LINEAR)
    np.testing.assert_allclose(acc, [[-0.5], [0.5]], rtol=1e-14)


def test_accelerations_single_particle_zero():
    state = ParticleState(0.0, np.array([[1.0]]), np.array([[2.0]]))
    np.testing.assert_array_equal(accelerations(state, LINEAR), [[0.0]])


def test_accelerations_vanish_for_identical_particles():
    model = ModelSpec(dimension=2, kernel=KernelSpec("constant", level=1.0),
                      coupling=CouplingSpec("linear"),
                      repulsion=RepulsionSpec("saturated", cap=0.5, softening=1.0),
                      alpha=1.0, phi_star=1.0)
    state = ParticleState(0.0, np.ones((4, 2)), np.ones((4, 2)))
    np.testing.assert_allclose(accelerations(state, model), 0.0, atol=1e-15)


def test_accelerations_momentum_free():
    # action-reaction: the acceleration sum vanishes for every model
    rng = np.random.default_rng(3)
    model = ModelSpec(dimension=3, kernel=KernelSpec("cucker_smale",
                                                     amplitude=1.0, decay=0.5),
                      coupling=CouplingSpec("power", exponent=1.1),
                      repulsion=RepulsionSpec("saturated", cap=0.2, softening=0.5),
                      alpha=1.1, phi_star=0.2)
    state = ParticleState(0.0, rng.standard_normal((9, 3)),
                          rng.standard_normal((9, 3)))
    total = np.sum(accelerations(state, model), axis=0)
    np.testing.assert_allclose(total, 0.0, atol=1e-13)


def test_accelerations_permutation_equivariant():
    rng = np.random.default_rng(4)
    state = ParticleState(0.0, rng.standard_normal((8, 2)),
                          rng.standard_normal((8, 2)))
    perm = rng.permutation(8)
    model = ModelSpec(dimension=2)
    a = accelerations(state, model)[perm]
    permuted = ParticleState(0.0, state.positions[perm], state.velocities[perm])
    b = accelerations(permuted, model)
    np.testing.assert_allclose(a, b, rtol=1e-14)


def test_step_fixed_point():
    state = ParticleState(0.0, np.array([[0.0], [1.0]]), np.zeros((2, 1)))
    config = IntegratorConfig(dt=0.1, t_end=1.0, error_tol=1e-10)
    out = step(state, LINEAR, config, 0.1)
    assert out.time == pytest.approx(0.1)
    np.testing.assert_allclose(out.positions, state.positions, atol=1e-15)


def test_step_matches_two_body_closed_form():
    # relative velocity obeys w' = -w, so w(t) = w(0) e^{-t}
    config = IntegratorConfig(dt=0.05, t_end=1.0, error_tol=1e-10)
    state = two_body()
    while state.time < 1.0 - 1e-12:
        state = step(state, LINEAR, config, min(config.dt, 1.0 - state.time))
    w = state.velocities[0, 0] - state.velocities[1, 0]
    assert w == pytest.approx(math.exp(-1.0), rel=1e-8)


def test_step_galilean_boost():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((5, 2))
    v = rng.standard_normal((5, 2))
    c = np.array([2.0, -1.0])
    model = ModelSpec(dimension=2)
    config = IntegratorConfig(dt=0.1, t_end=1.0, error_tol=1e-10)
    plain = step(ParticleState(0.0, x, v), model, config, 0.1)
    boosted = step(ParticleState(0.0, x, v + c), model, config, 0.1)
    assert plain.time == boosted.time
    np.testing.assert_allclose(boosted.velocities, plain.velocities + c,
                               atol=1e-12)
    np.testing.assert_allclose(boosted.positions,
                               plain.positions + c * plain.time, atol=1e-12)


def test_integrate_zero_horizon():
    config = IntegratorConfig(dt=0.1, t_end=0.0, error_tol=1e-8)
    traj = integrate(two_body(), LINEAR, config)
    assert len(traj) == 1
    assert traj.times[0] == 0.0


def test_integrate_two_body_fluctuation_decay():
    config = IntegratorConfig(dt=0.01, t_end=1.0, error_tol=1e-10)
    traj = integrate(two_body(), LINEAR, config)
    g0 = traj.moments[0].Gf
    g1 = traj.moments[-1].Gf
    assert g1 == pytest.approx(g0 * math.exp(-2.0), rel=1e-6)


def test_integrate_momentum_conserved():
    rng = np.random.default_rng(6)
    model = ModelSpec(dimension=2,
                      kernel=KernelSpec("cucker_smale", amplitude=1.0, decay=0.25),
                      repulsion=RepulsionSpec("saturated", cap=0.1, softening=1.0),
                      phi_star=0.25)
    state = ParticleState(0.0, rng.standard_normal((32, 2)),
                          rng.standard_normal((32, 2)))
    config = IntegratorConfig(dt=0.05, t_end=2.0, error_tol=1e-8)
    traj = integrate(state, model, config)
    v1_0 = traj.moments[0].V1
    for mm in traj.moments:
        assert np.max(np.abs(mm.V1 - v1_0)) <= 1e-9


def test_integrate_max_steps_exposes_partial_trajectory():
    config = IntegratorConfig(dt=0.01, t_end=10.0, error_tol=1e-10, max_steps=5)
    with pytest.raises(IntegrationError) as err:
        integrate(two_body(), LINEAR, config)
    assert len(err.value.trajectory) >= 1
    assert not err.value.trajectory.complete


def test_integrate_deterministic():
    config = IntegratorConfig(dt=0.02, t_end=1.0, error_tol=1e-9)
    a = integrate(two_body(), LINEAR, config)
    b = integrate(two_body(), LINEAR, config)
    assert np.array_equal(a.times, b.times)
    for sa, sb in zip(a.states, b.states):
        assert np.array_equal(sa.positions, sb.positions)
        assert np.array_equal(sa.velocities, sb.velocities)
