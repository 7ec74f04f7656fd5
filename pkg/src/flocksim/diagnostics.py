"""Verdicts on the quantitative behavior of simulated runs.

Each verifier turns a trajectory (or a family of runs) into a pass/fail
report against a computable bound: exponential or polynomial decay of the
velocity fluctuation, boundedness of the position fluctuation, growth
envelope of the support radius, stability of the flow under initial
perturbations, mean-field convergence across particle counts, and the
flocking distance to the aligned limit measure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import IntegratorConfig, ParticleState, Trajectory, integrate
from .kinetic import EmpiricalMeasure, InitialSpec, field_H, from_particles, sample_initial
from .model import ModelSpec, cstar
from .transport import DiscreteMeasure, GroundMetric, dirac_flocking_distance, w1


@dataclass(frozen=True)
class DecayEnvelope:
    """Velocity-fluctuation decay bound: exponential for alpha = 1,
    polynomial (B + A t)^(-1/(alpha-1)) for alpha > 1."""

    alpha: float
    cstar: float
    g0: float

    def __post_init__(self):
        if not self.cstar > 0:
            raise ValueError("cstar must be positive")
        if self.g0 < 0:
            raise ValueError("g0 must be nonnegative")

    @property
    def B(self) -> float:
        return self.g0 ** (1.0 - self.alpha) if self.g0 > 0 else math.inf

    @property
    def A(self) -> float:
        return (self.alpha - 1.0) * self.cstar


def envelope_value(env: DecayEnvelope, t: float) -> float:
    if env.g0 == 0.0:
        return 0.0
    if env.alpha == 1.0:
        return env.g0 * math.exp(-env.cstar * t)
    return (env.B + env.A * t) ** (-1.0 / (env.alpha - 1.0))


@dataclass
class VerdictReport:
    name: str
    passed: bool
    worst_margin: float
    witness_time: float
    tolerance: float
    series: list = field(default_factory=list)  # rows of (t, observed, bound)
    details: dict = field(default_factory=dict)


@dataclass
class ConvergenceTable:
    reference: str
    rows: list = field(default_factory=list)  # (N, t, w1, wall_seconds)


def effective_phi_star(model: ModelSpec, traj: Trajectory) -> float:
    """Kernel minimum over the largest pairwise distance observed in the run."""
    dmax = 0.0
    for state in traj.states:
        x = state.positions
        dx = x[:, None, :] - x[None, :, :]
        dmax = max(dmax, float(np.max(np.linalg.norm(dx, axis=-1))))
    return model.kernel.min_on_interval(dmax)


def verify_decay(traj: Trajectory, env: DecayEnvelope, rel_tol: float = 1e-3) -> VerdictReport:
    """Check the velocity fluctuation against the decay envelope at every
    snapshot; a zero initial fluctuation must stay below rel_tol absolutely."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    t0 = traj.times[0]
    series = []
    worst, wt = math.inf, t0
    for t, mm in zip(traj.times, traj.moments):
        bound = envelope_value(env, t - t0)
        series.append((t, mm.Gf, bound))
        if env.g0 == 0.0:
            margin = rel_tol - mm.Gf
        else:
            margin = bound * (1.0 + rel_tol) - mm.Gf
        if margin < worst:
            worst, wt = margin, t
    return VerdictReport("decay_envelope", worst >= 0.0, worst, wt, rel_tol,
                         series, details={"alpha": env.alpha, "cstar": env.cstar,
                                          "g0": env.g0})


def verify_gamma_bound(traj: Trajectory, window: float,
                       plateau_frac: float = 0.05) -> VerdictReport:
    """Boundedness of the position fluctuation at finite horizon.

    Passes when the trailing-window increase of the running maximum is at
    most ``plateau_frac`` of the overall supremum (plateau criterion) and
    every value is finite.
    """
    if len(traj) < 2:
        raise ValueError("trajectory too short")
    times = np.asarray(traj.times)
    gammas = np.asarray([mm.Gamma for mm in traj.moments])
    t_end = times[-1]
    if t_end - times[0] < 2.0 * window:
        raise ValueError("trajectory shorter than two windows")
    last = gammas[times >= t_end - window]
    prev = gammas[(times >= t_end - 2.0 * window) & (times < t_end - window)]
    if len(last) == 0 or len(prev) == 0:
        raise ValueError("windows contain no snapshots")
    sup = float(np.max(gammas))
    increment = float(np.max(last) - np.max(prev))
    passed = bool(np.isfinite(sup) and increment <= plateau_frac * max(sup, 1e-300))
    series = [(t, g, sup) for t, g in zip(times, gammas)]
    return VerdictReport("gamma_bound", passed,
                         plateau_frac * sup - increment,
                         float(t_end), plateau_frac, series,
                         details={"sup_gamma": sup, "window": window,
                                  "trailing_increment": increment})


def _support_envelope(r0: float, c: float, t: np.ndarray) -> np.ndarray:
    return r0 * np.exp(c * t) + c * np.sqrt(np.maximum(np.exp(c * t) - 1.0, 0.0))


def fit_support_envelope(traj: Trajectory, c_cap: float = 10.0,
                         rel_resolution: float = 1e-6):
    """Smallest growth constant whose envelope dominates the observed
    support radius, found by bisection; fails if even ``c_cap`` does not."""
    times = np.asarray(traj.times) - traj.times[0]
    radii = np.asarray([mm.support_radius for mm in traj.moments])
    r0 = float(radii[0])
    slack = 1e-9 * (1.0 + r0)

    def dominates(c):
        return bool(np.all(_support_envelope(r0, c, times) + slack >= radii))

    if not dominates(c_cap):
        report = VerdictReport("support_envelope", False, -math.inf,
                               float(times[np.argmax(radii)]), rel_resolution,
                               [(t, r, _support_envelope(r0, c_cap, np.array([t]))[0])
                                for t, r in zip(times, radii)],
                               details={"R0": r0, "C": math.inf, "C_cap": c_cap})
        return r0, math.inf, report
    lo, hi = 0.0, c_cap
    if dominates(0.0):
        hi = 0.0
    while hi - lo > rel_resolution * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if dominates(mid):
            hi = mid
        else:
            lo = mid
    c = hi
    env = _support_envelope(r0, c, times)
    margins = env + slack - radii
    wi = int(np.argmin(margins))
    report = VerdictReport("support_envelope", True, float(margins[wi]),
                           float(times[wi]), rel_resolution,
                           [(t, r, e) for t, r, e in zip(times, radii, env)],
                           details={"R0": r0, "C": c, "C_cap": c_cap})
    return r0, c, report


def _perturb_velocities(state: ParticleState, perturbation: float,
                        seed: int) -> ParticleState:
    rng = np.random.Generator(np.random.Philox(key=seed))
    n, d = state.n, state.d
    u = rng.standard_normal((n, d))
    u /= np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-300)
    r = perturbation * rng.random((n, 1)) ** (1.0 / d)
    return ParticleState(state.time, state.positions.copy(),
                         state.velocities + u * r)


def _w1_states(sa: ParticleState, sb: ParticleState, metric: GroundMetric) -> float:
    a = DiscreteMeasure.from_empirical(from_particles(sa))
    b = DiscreteMeasure.from_empirical(from_particles(sb))
    value, _ = w1(a, b, metric)
    return value


def _states_at_times(state, model, config, times):
    """Integrate once and return the states at the requested times exactly."""
    out = []
    current = state.copy()
    for t in times:
        span = t - current.time
        if span < 0:
            raise ValueError("times must be nondecreasing")
        if span > 0:
            seg = replace(config, t_end=span)
            current = integrate(current, model, seg).states[-1]
        out.append(current.copy())
    return out


def stability_study(f0_spec: InitialSpec, perturbation: float, model: ModelSpec,
                    config: IntegratorConfig, times,
                    metric: GroundMetric | None = None, seed: int = 1):
    """Distance between a run and its velocity-perturbed twin over time.

    Returns rows (t, W1(f_t, g_t), ratio to the initial distance) plus the
    running-maximum envelope of the ratio.  A zero perturbation yields
    identically zero distances (both runs are bitwise identical).
    """
    if perturbation < 0:
        raise ValueError("perturbation must be >= 0")
    metric = metric or GroundMetric()
    f0 = sample_initial(f0_spec)
    g0 = _perturb_velocities(f0, perturbation, seed) if perturbation > 0 else f0.copy()
    w0 = _w1_states(f0, g0, metric)
    fs = _states_at_times(f0, model, config, times)
    gs = _states_at_times(g0, model, config, times)
    rows = []
    env = 0.0
    envelope = []
    for t, fa, ga in zip(times, fs, gs):
        wt = _w1_states(fa, ga, metric)
        ratio = wt / w0 if w0 > 0 else (0.0 if wt == 0 else math.inf)
        env = max(env, ratio)
        rows.append((t, wt, ratio))
        envelope.append(env)
    return rows, envelope, w0


def meanfield_study(base_spec: InitialSpec, n_list, model: ModelSpec,
                    config: IntegratorConfig, t_eval: float,
                    pairing: str = "against_largest",
                    metric: GroundMetric | None = None) -> ConvergenceTable:
    """Wasserstein-1 gap between coupled clouds of increasing size.

    All clouds share one seed with nested sampling, so the first N particles
    of the largest cloud form each smaller one.  With no closed-form kinetic
    solution available the largest cloud is the reference
    (``against_largest``); ``consecutive`` compares adjacent sizes.
    """
    n_list = list(n_list)
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("need >= 3 strictly increasing particle counts")
    if pairing not in ("against_largest", "consecutive"):
        raise ValueError(f"unknown pairing {pairing!r}")
    metric = metric or GroundMetric()

    finals = {}
    for n in n_list:
        spec = replace(base_spec, n=n)
        state = sample_initial(spec)
        cfg = replace(config, t_end=t_eval)
        start = time.perf_counter()
        finals[n] = (integrate(state, model, cfg).states[-1],
                     time.perf_counter() - start)

    table = ConvergenceTable(
        reference=(f"largest cloud N={n_list[-1]}" if pairing == "against_largest"
                   else "next larger cloud"))
    pairs = ([(n, n_list[-1]) for n in n_list[:-1]] if pairing == "against_largest"
             else list(zip(n_list[:-1], n_list[1:])))
    for n, ref in pairs:
        start = time.perf_counter()
        dist = _w1_states(finals[n][0], finals[ref][0], metric)
        wall = finals[n][1] + (time.perf_counter() - start)
        table.rows.append((n, t_eval, dist, wall))
    return table


def flocking_study(traj: Trajectory, metric: GroundMetric | None = None):
    """Per-snapshot W1 distance to the aligned limit (same positions, every
    velocity set to the initial mean) alongside the dominating sqrt of the
    velocity fluctuation."""
    metric = metric or GroundMetric()
    v_ref = traj.moments[0].V1
    rows = []
    for t, state, mm in zip(traj.times, traj.states, traj.moments):
        mu = from_particles(state)
        dist = dirac_flocking_distance(mu, v_ref, metric)
        rows.append((t, dist, math.sqrt(max(mm.Gf, 0.0))))
    return rows


def lipschitz_probe(mu: EmpiricalMeasure, model: ModelSpec, ball_radius: float,
                    sample_budget: int, seed: int = 0) -> float:
    """Sampled estimate of the interaction field's Lipschitz constant on a
    phase-space ball; diagnostic input to stability envelopes."""
    if sample_budget < 2:
        raise ValueError("sample_budget must be >= 2")
    rng = np.random.Generator(np.random.Philox(key=seed))
    d = mu.d

    def ball(m):
        u = rng.standard_normal((m, 2 * d))
        u /= np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-300)
        return ball_radius * rng.random((m, 1)) ** (1.0 / (2 * d)) * u

    p = ball(sample_budget)
    q = ball(sample_budget)
    sep = np.linalg.norm(p - q, axis=1)
    keep = sep >= 1e-9
    if not np.any(keep):
        return 0.0
    hp = field_H(mu, p[keep, :d], p[keep, d:], model)
    hq = field_H(mu, q[keep, :d], q[keep, d:], model)
    return float(np.max(np.linalg.norm(hp - hq, axis=1) / sep[keep]))
