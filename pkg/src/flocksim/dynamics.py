"""N-particle dynamics: vectorized O(N^2) forces and an adaptive RK4 loop.

The force kernel is fully vectorized over particle pairs with a fixed
reduction order, so repeated runs are bitwise reproducible.  Time stepping
is classical RK4 with step-doubling error control: every accepted step
carries a local error estimate below the configured tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelSpec, eval_g, eval_phi, eval_repulsion


class IntegrationError(RuntimeError):
    """Raised when the step controller cannot meet the error tolerance."""


@dataclass
class ParticleState:
    """Positions and velocities of n particles in d dimensions at one time."""

    time: float
    positions: np.ndarray   # (n, d)
    velocities: np.ndarray  # (n, d)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape != self.velocities.shape:
            raise ValueError("positions and velocities must both be (n, d)")
        if self.positions.shape[0] < 1 or self.positions.shape[1] < 1:
            raise ValueError("need n >= 1 and d >= 1")
        if not (np.isfinite(self.positions).all() and np.isfinite(self.velocities).all()
                and math.isfinite(self.time)):
            raise ValueError("state entries must be finite")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def copy(self) -> "ParticleState":
        return ParticleState(self.time, self.positions.copy(), self.velocities.copy())


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.05
    t_end: float = 10.0
    error_tol: float = 1e-9
    max_steps: int = 1_000_000
    observer_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if not self.error_tol > 0:
            raise ValueError("error_tol must be positive")
        if self.observer_stride < 1:
            raise ValueError("observer_stride must be >= 1")


@dataclass
class Trajectory:
    """Snapshots of a run: strictly increasing times starting at t = 0."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    moments: list = field(default_factory=list)
    complete: bool = True

    def append(self, state: ParticleState, moment) -> None:
        if self.times and state.time <= self.times[-1]:
            raise ValueError("snapshot times must be strictly increasing")
        self.times.append(state.time)
        self.states.append(state)
        self.moments.append(moment)

    def __len__(self) -> int:
        return len(self.times)


def alignment_measure(state: ParticleState) -> float:
    """Normalized pairwise velocity spread (1/n) * sqrt(sum_{i>j} |v_i-v_j|^2).

    Zero exactly when all velocities coincide; invariant under adding a
    common velocity to every particle.
    """
    v = state.velocities
    dv = v[None, :, :] - v[:, None, :]
    total = np.einsum("ijk,ijk->", dv, dv)  # counts each pair twice
    return math.sqrt(max(total, 0.0) / 2.0) / state.n


def accelerations(state: ParticleState, model: ModelSpec) -> np.ndarray:
    """Pairwise forces for every particle, (n, d).

    The diagonal i == j terms are kept in the sum and vanish analytically
    (odd coupling at zero, repulsion proportional to the zero displacement).
    """
    x, v, n = state.positions, state.velocities, state.n
    dx = x[:, None, :] - x[None, :, :]          # x_i - x_j
    r = np.linalg.norm(dx, axis=-1)
    phi = eval_phi(model.kernel, r)
    dv = v[None, :, :] - v[:, None, :]          # v_j - v_i
    align = np.einsum("ij,ijk->ik", phi, eval_g(model.coupling, dv)) / n

    if model.repulsion.preset == "zero":
        return align
    lam = alignment_measure(state)
    rep = eval_repulsion(model.repulsion, dx).sum(axis=1)
    return align + (lam ** (2.0 * model.alpha - 1.0) / n) * rep


def _rhs(model: ModelSpec, y: np.ndarray, d: int) -> np.ndarray:
    state = ParticleState.__new__(ParticleState)
    state.time = 0.0
    state.positions = y[:, :d]
    state.velocities = y[:, d:]
    return np.concatenate([state.velocities, accelerations(state, model)], axis=1)


def _rk4(model: ModelSpec, y: np.ndarray, h: float, d: int) -> np.ndarray:
    k1 = _rhs(model, y, d)
    k2 = _rhs(model, y + (h / 2.0) * k1, d)
    k3 = _rhs(model, y + (h / 2.0) * k2, d)
    k4 = _rhs(model, y + h * k3, d)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_UNDERFLOW = 1e-9


def _attempt(model, y, h, d):
    """One step-doubling trial: full step vs. two half steps."""
    full = _rk4(model, y, h, d)
    half = _rk4(model, _rk4(model, y, h / 2.0, d), h / 2.0, d)
    err = float(np.max(np.abs(half - full))) / 15.0
    return half, err


def step(state: ParticleState, model: ModelSpec, config: IntegratorConfig,
         max_h: float | None = None) -> ParticleState:
    """Advance by one accepted step of size <= config.dt.

    The local error estimate of the accepted step is below
    ``config.error_tol``; the step size is halved on rejection.  A required
    step below ``dt * 1e-9`` aborts with :class:`IntegrationError`.
    """
    d = state.d
    y = np.concatenate([state.positions, state.velocities], axis=1)
    h = config.dt if max_h is None else min(config.dt, max_h)
    while True:
        ynew, err = _attempt(model, y, h, d)
        if err <= config.error_tol:
            return ParticleState(state.time + h, ynew[:, :d].copy(), ynew[:, d:].copy())
        h *= 0.5
        if h < config.dt * _UNDERFLOW:
            raise IntegrationError(
                f"step size underflow at t={state.time}: required h={h}")


def integrate(state: ParticleState, model: ModelSpec, config: IntegratorConfig) -> Trajectory:
    """Run from the given state to t = state.time + t_end.

    Snapshots (with moments) are recorded at the start, every
    ``observer_stride`` accepted steps, and at the final time.  Exceeding
    ``max_steps`` raises :class:`IntegrationError` carrying the partial
    trajectory in ``exc.trajectory``.
    """
    from .kinetic import from_particles, moments  # local import, avoids cycle

    traj = Trajectory()
    current = state.copy()
    traj.append(current, moments(from_particles(current)))
    t_final = state.time + config.t_end
    steps = 0
    while current.time < t_final - 1e-14 * max(1.0, abs(t_final)):
        if steps >= config.max_steps:
            traj.complete = False
            exc = IntegrationError(f"max_steps={config.max_steps} exceeded at t={current.time}")
            exc.trajectory = traj
            raise exc
        remaining = t_final - current.time
        current = step(current, model, config, max_h=remaining)
        steps += 1
        if steps % config.observer_stride == 0 or current.time >= t_final - 1e-14:
            traj.append(current, moments(from_particles(current)))
    if traj.times[-1] < current.time:
        traj.append(current, moments(from_particles(current)))
    return traj
