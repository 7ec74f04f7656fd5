"""Empirical measures on phase space: moments, mean-field field, characteristics.

An empirical measure is a weighted atom cloud on position-velocity space.
This module computes its moment functionals (mean position/velocity, second
moments, velocity and position fluctuations, support radius), evaluates the
mean-field interaction field at arbitrary phase points, samples initial
clouds from preset distributions, and integrates the characteristic ODE
driven by a recorded trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .dynamics import IntegratorConfig, ParticleState, Trajectory
from .model import ModelSpec, eval_g, eval_phi, eval_repulsion

_WEIGHT_TOL = 1e-9


@dataclass
class EmpiricalMeasure:
    """Weighted atoms (x_k, v_k, w_k) forming a probability measure."""

    x: np.ndarray  # (k, d)
    v: np.ndarray  # (k, d)
    w: np.ndarray  # (k,)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if self.x.shape != self.v.shape or self.x.ndim != 2:
            raise ValueError("x and v must both be (k, d)")
        if self.w.shape != (self.x.shape[0],):
            raise ValueError("weights must be (k,)")
        if np.any(self.w <= 0):
            raise ValueError("weights must be positive")
        if abs(self.w.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must sum to 1")
        if not (np.isfinite(self.x).all() and np.isfinite(self.v).all()):
            raise ValueError("atom coordinates must be finite")

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def natoms(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class MomentSet:
    V1: np.ndarray
    X1: np.ndarray
    V2: float
    X2: float
    Gf: float
    Gamma: float
    support_radius: float


@dataclass(frozen=True)
class InitialSpec:
    """Preset initial distributions with compact support by construction.

    * ``uniform_ball``: x uniform in a ball of radius_x around center_x,
      v uniform in a ball of radius_v around center_v.
    * ``gaussian_truncated``: isotropic normals (sigma_x, sigma_v) with
      draws outside the truncation radii rejected and redrawn.
    * ``two_cluster``: half the particles around center_x + offset, half
      around center_x - offset, each a uniform ball.
    """

    preset: str
    n: int
    d: int
    seed: int = 0
    center_x: tuple = ()
    center_v: tuple = ()
    radius_x: float = 1.0
    radius_v: float = 1.0
    sigma_x: float = 1.0
    sigma_v: float = 1.0
    truncation_x: float = 3.0
    truncation_v: float = 3.0
    cluster_offset: tuple = ()

    def __post_init__(self):
        if self.preset not in ("uniform_ball", "gaussian_truncated", "two_cluster"):
            raise ValueError(f"unknown initial preset {self.preset!r}")
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")

    def _center(self, which: str) -> np.ndarray:
        c = self.center_x if which == "x" else self.center_v
        return np.asarray(c, dtype=float) if len(c) else np.zeros(self.d)


def from_particles(state: ParticleState) -> EmpiricalMeasure:
    """Uniform-weight atom cloud at the particle phase-space locations."""
    n = state.n
    return EmpiricalMeasure(state.positions.copy(), state.velocities.copy(),
                            np.full(n, 1.0 / n))


def moments(mu: EmpiricalMeasure) -> MomentSet:
    """All moment functionals of the measure in one pass."""
    w = mu.w
    V1 = w @ mu.v
    X1 = w @ mu.x
    V2 = float(w @ np.sum(mu.v * mu.v, axis=1))
    X2 = float(w @ np.sum(mu.x * mu.x, axis=1))
    Gf = V2 - float(V1 @ V1)
    Gamma = X2 - float(X1 @ X1)
    return MomentSet(V1=V1, X1=X1, V2=V2, X2=X2, Gf=Gf, Gamma=Gamma,
                     support_radius=support_radius(mu))


def support_radius(mu: EmpiricalMeasure, norm: str = "euclidean") -> float:
    """Largest phase-space norm over atoms.

    ``euclidean`` measures |(x, v)| on the concatenated vector;
    ``sum_of_norms`` measures |x| + |v|.
    """
    if norm == "euclidean":
        vals = np.sum(mu.x * mu.x, axis=1) + np.sum(mu.v * mu.v, axis=1)
        return math.sqrt(float(np.max(vals)))
    if norm == "sum_of_norms":
        vals = np.linalg.norm(mu.x, axis=1) + np.linalg.norm(mu.v, axis=1)
        return float(np.max(vals))
    raise ValueError(f"unknown phase-space norm {norm!r}")


def _ball_point(rng, center, radius, d):
    u = rng.standard_normal(d)
    nrm = np.linalg.norm(u)
    if nrm == 0.0:
        u = np.zeros(d)
        u[0] = 1.0
        nrm = 1.0
    return center + radius * rng.random() ** (1.0 / d) * (u / nrm)


def _truncated_gaussian(rng, center, sigma, trunc, d):
    # Inverse-CDF draw, redrawn until inside the truncation ball.
    while True:
        z = ndtri(rng.random(d))
        if np.linalg.norm(z) * sigma <= trunc:
            return center + sigma * z


def sample_initial(spec: InitialSpec) -> ParticleState:
    """Draw n particles from the preset distribution.

    Each particle uses its own seeded substream, so the first n particles of
    a larger cloud with the same seed coincide with the smaller cloud
    (nested sampling for mean-field studies).
    """
    cx, cv = spec._center("x"), spec._center("v")
    xs = np.empty((spec.n, spec.d))
    vs = np.empty((spec.n, spec.d))
    offset = (np.asarray(spec.cluster_offset, dtype=float)
              if len(spec.cluster_offset) else np.zeros(spec.d))
    if spec.preset == "two_cluster" and not np.any(offset):
        offset = np.zeros(spec.d)
        offset[0] = 2.0 * spec.radius_x

    for i in range(spec.n):
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(i,)))
        if spec.preset == "uniform_ball":
            xs[i] = _ball_point(rng, cx, spec.radius_x, spec.d)
            vs[i] = _ball_point(rng, cv, spec.radius_v, spec.d)
        elif spec.preset == "gaussian_truncated":
            xs[i] = _truncated_gaussian(rng, cx, spec.sigma_x, spec.truncation_x, spec.d)
            vs[i] = _truncated_gaussian(rng, cv, spec.sigma_v, spec.truncation_v, spec.d)
        else:  # two_cluster
            side = 1.0 if i % 2 == 0 else -1.0
            xs[i] = _ball_point(rng, cx + side * offset, spec.radius_x, spec.d)
            vs[i] = _ball_point(rng, cv, spec.radius_v, spec.d)
    return ParticleState(0.0, xs, vs)


def field_H(mu: EmpiricalMeasure, x, v, model: ModelSpec) -> np.ndarray:
    """Mean-field interaction field at phase point(s) (x, v).

    Accepts single d-vectors or arrays (m, d); returns the matching shape.
    For the empirical measure of a particle state, the field at each atom
    equals that particle's acceleration.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    V = v[None, :] if single else v

    dx = X[:, None, :] - mu.x[None, :, :]
    r = np.linalg.norm(dx, axis=-1)
    phi = eval_phi(model.kernel, r)
    gvals = eval_g(model.coupling, V[:, None, :] - mu.v[None, :, :])
    out = -np.einsum("qa,a,qak->qk", phi, mu.w, gvals)

    if model.repulsion.preset != "zero":
        gf = max(moments(mu).Gf, 0.0)
        rep = np.einsum("a,qak->qk", mu.w, eval_repulsion(model.repulsion, dx))
        out = out + gf ** ((2.0 * model.alpha - 1.0) / 2.0) * rep
    return out[0] if single else out


class _MeasureFlow:
    """Time interpolation of a recorded trajectory's empirical measure.

    ``linear`` interpolates atom coordinates between snapshots using the
    particle-index correspondence; ``hold`` freezes the nearest earlier
    snapshot.
    """

    def __init__(self, traj: Trajectory, interp: str = "linear"):
        if len(traj) == 0:
            raise ValueError("empty trajectory")
        if interp not in ("linear", "hold"):
            raise ValueError(f"unknown interpolation {interp!r}")
        self.times = np.asarray(traj.times)
        self.states = traj.states
        self.interp = interp
        n = self.states[0].n
        self.w = np.full(n, 1.0 / n)

    def measure_at(self, t: float) -> EmpiricalMeasure:
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise ValueError(f"time {t} outside trajectory range "
                             f"[{times[0]}, {times[-1]}]")
        k = int(np.searchsorted(times, t, side="right")) - 1
        k = min(max(k, 0), len(times) - 1)
        s0 = self.states[k]
        if self.interp == "hold" or k == len(times) - 1:
            return EmpiricalMeasure(s0.positions, s0.velocities, self.w)
        s1 = self.states[k + 1]
        lam = (t - times[k]) / (times[k + 1] - times[k])
        return EmpiricalMeasure(
            (1.0 - lam) * s0.positions + lam * s1.positions,
            (1.0 - lam) * s0.velocities + lam * s1.velocities,
            self.w)


@dataclass
class CharacteristicPath:
    times: np.ndarray
    x: np.ndarray  # (steps+1, m, d)
    v: np.ndarray


def flow_characteristic(traj: Trajectory, x0, v0, config: IntegratorConfig,
                        model: ModelSpec, interp: str = "linear") -> CharacteristicPath:
    """Integrate the characteristic ODE under the recorded measure flow.

    ``x0, v0`` may be single d-vectors or arrays (m, d) of seeds integrated
    together.  Fixed RK4 substeps of size <= config.dt are taken inside each
    snapshot interval, with the measure read from the trajectory at the
    stage times.
    """
    flow = _MeasureFlow(traj, interp=interp)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))

    def rhs(t, xq, vq):
        mu = flow.measure_at(t)
        return vq, field_H(mu, xq, vq, model)

    ts = [flow.times[0]]
    xs, vs = [x0.copy()], [v0.copy()]
    xq, vq = x0.copy(), v0.copy()
    for k in range(len(flow.times) - 1):
        t0, t1 = flow.times[k], flow.times[k + 1]
        nsub = max(1, int(math.ceil((t1 - t0) / config.dt - 1e-12)))
        h = (t1 - t0) / nsub
        t = t0
        for _ in range(nsub):
            k1x, k1v = rhs(t, xq, vq)
            k2x, k2v = rhs(t + h / 2, xq + h / 2 * k1x, vq + h / 2 * k1v)
            k3x, k3v = rhs(t + h / 2, xq + h / 2 * k2x, vq + h / 2 * k2v)
            k4x, k4v = rhs(t + h, xq + h * k3x, vq + h * k3v)
            xq = xq + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            vq = vq + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
            t += h
        ts.append(t1)
        xs.append(xq.copy())
        vs.append(vq.copy())
    return CharacteristicPath(np.asarray(ts), np.asarray(xs), np.asarray(vs))
