"""Model ingredient functions and structural assumption checks.

The interacting-particle model is built from three ingredients: a strictly
positive interaction-rate kernel ``phi(r)`` weighting pairwise alignment, an
odd coercive coupling force ``g(v)`` steering velocities together, and a
bounded repelling force ``f(s) * x`` pushing close particles apart.  Each
ingredient comes as a small preset family with analytically known constants,
so tests have exact ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Raised when an evaluation input is outside the ingredient's domain."""


class ValidationError(ValueError):
    """Raised when a model specification violates its structural constraints."""


# Global well-posedness requires the coupling exponent below 5/4.
ALPHA_MIN = 1.0
ALPHA_MAX = 1.25


def _require_finite(value, name):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return arr


@dataclass(frozen=True)
class KernelSpec:
    """Interaction-rate kernel phi(r) > 0 for r >= 0.

    Presets:
      * ``constant``: phi(r) = level
      * ``cucker_smale``: phi(r) = amplitude / (1 + r^2)^decay
    """

    preset: str = "constant"
    level: float = 1.0
    amplitude: float = 1.0
    decay: float = 1.0

    def __post_init__(self):
        if self.preset not in ("constant", "cucker_smale"):
            raise ValidationError(f"unknown kernel preset {self.preset!r}")
        if self.preset == "constant" and not self.level > 0:
            raise ValidationError("constant kernel level must be positive")
        if self.preset == "cucker_smale":
            if not self.amplitude > 0:
                raise ValidationError("kernel amplitude must be positive")
            if self.decay < 0:
                raise ValidationError("kernel decay exponent must be >= 0")

    def min_on_interval(self, r_max: float) -> float:
        """Exact minimum of phi over [0, r_max] (both presets are monotone)."""
        if self.preset == "constant":
            return self.level
        return self.amplitude / (1.0 + r_max * r_max) ** self.decay


@dataclass(frozen=True)
class CouplingSpec:
    """Odd coupling force g(v) with coercivity g(v).v >= |v|^(2*alpha).

    Presets:
      * ``linear``: g(v) = v (exponent fixed at 1)
      * ``power``: g(v) = v * |v|^(2*exponent - 2)
    """

    preset: str = "linear"
    exponent: float = 1.0

    def __post_init__(self):
        if self.preset not in ("linear", "power"):
            raise ValidationError(f"unknown coupling preset {self.preset!r}")
        if self.preset == "linear" and self.exponent != 1.0:
            raise ValidationError("linear coupling has exponent 1")
        if not (ALPHA_MIN <= self.exponent < ALPHA_MAX):
            raise ValidationError(
                f"coupling exponent {self.exponent} outside [{ALPHA_MIN}, {ALPHA_MAX})"
            )


@dataclass(frozen=True)
class RepulsionSpec:
    """Repelling force f(s) applied as f(|x|^2) * x, with |f(|x|^2) x| <= cap.

    Presets:
      * ``zero``: no repulsion, cap = 0
      * ``saturated``: f(s) = cap / sqrt(s + softening)
    """

    preset: str = "zero"
    cap: float = 0.0
    softening: float = 1.0

    def __post_init__(self):
        if self.preset not in ("zero", "saturated"):
            raise ValidationError(f"unknown repulsion preset {self.preset!r}")
        if self.preset == "zero" and self.cap != 0.0:
            raise ValidationError("zero repulsion has cap 0")
        if self.preset == "saturated":
            if self.cap < 0:
                raise ValidationError("repulsion cap must be >= 0")
            if not self.softening > 0:
                raise ValidationError("repulsion softening must be positive")


@dataclass(frozen=True)
class ModelSpec:
    """Full model: ingredient presets plus declared structural constants.

    ``phi_star`` is the declared positive lower bound of the kernel on the
    working ball (exact for the constant preset; a user-declared bound for
    the decaying preset).  The coupling coercivity constant is normalized to
    one by the preset definitions.  ``f_star`` is the repulsion cap.
    """

    dimension: int = 2
    kernel: KernelSpec = field(default_factory=KernelSpec)
    coupling: CouplingSpec = field(default_factory=CouplingSpec)
    repulsion: RepulsionSpec = field(default_factory=RepulsionSpec)
    alpha: float = 1.0
    phi_star: float = 1.0

    g_star = 1.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValidationError("dimension must be >= 1")
        if not (ALPHA_MIN <= self.alpha < ALPHA_MAX):
            raise ValidationError(
                f"alpha {self.alpha} outside [{ALPHA_MIN}, {ALPHA_MAX})"
            )
        if self.alpha != self.coupling.exponent:
            raise ValidationError("alpha must match the coupling exponent")
        if not self.phi_star > 0:
            raise ValidationError("phi_star must be positive")
        if not self.f_star < 2 ** (self.alpha - 0.5) * self.phi_star * self.g_star:
            raise ValidationError(
                "repulsion cap too large: need f_star < 2^(alpha-1/2) * phi_star"
            )

    @property
    def f_star(self) -> float:
        return self.repulsion.cap


def eval_phi(spec: KernelSpec, r):
    """Evaluate the interaction rate at distance(s) r >= 0."""
    r = _require_finite(r, "r")
    if np.any(r < 0):
        raise DomainError("distance must be nonnegative")
    if spec.preset == "constant":
        return np.broadcast_to(np.float64(spec.level), r.shape).copy() if r.ndim else float(spec.level)
    out = spec.amplitude / (1.0 + r * r) ** spec.decay
    return out if r.ndim else float(out)


def eval_g(spec: CouplingSpec, v):
    """Evaluate the coupling force on velocity difference vectors.

    Accepts a single d-vector or an array (..., d); vectorized over leading
    axes.
    """
    v = _require_finite(v, "v")
    if spec.preset == "linear":
        return v.copy()
    p = 2.0 * spec.exponent - 2.0
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    # |v|^p with p in (0, 1/2): zero vectors map to zero without warnings.
    scale = np.where(norm > 0, norm, 1.0) ** p
    scale = np.where(norm > 0, scale, 0.0)
    return v * scale


def eval_repulsion(spec: RepulsionSpec, x):
    """Evaluate the repelling force f(|x|^2) * x on displacement vectors."""
    x = _require_finite(x, "x")
    if spec.preset == "zero":
        return np.zeros_like(x)
    s = np.sum(x * x, axis=-1, keepdims=True)
    return spec.cap / np.sqrt(s + spec.softening) * x


def cstar(spec: ModelSpec) -> float:
    """Decay-rate constant 2^alpha * phi_star * g_star - sqrt(2) * f_star.

    Positive whenever the smallness condition on the repulsion cap holds;
    raises otherwise.
    """
    value = 2.0 ** spec.alpha * spec.phi_star * spec.g_star - math.sqrt(2.0) * spec.f_star
    if value <= 0:
        raise ValidationError(f"decay constant nonpositive ({value}); cap too large")
    return value


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    value: float
    witness: tuple | None = None
    note: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    radius: float
    sample_budget: int
    seed: int
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


# Sampled local-Lipschitz ratios above this are treated as evidence of a
# non-Lipschitz ingredient; smooth presets stay orders of magnitude below.
_LIPSCHITZ_CAP = 1e6


def check_assumptions(spec: ModelSpec, sample_budget: int, radius: float,
                      seed: int = 0) -> AssumptionReport:
    """Sampled certificate for the four structural assumptions.

    Points x, v are drawn from the ball of the given radius with a seeded
    counter-based generator, so the report is reproducible and thread-safe.
    Failures are recorded in the report, never raised.
    """
    if sample_budget < 1:
        raise ValidationError("sample_budget must be >= 1")
    if not radius > 0:
        raise ValidationError("radius must be positive")

    rng = np.random.Generator(np.random.Philox(key=seed))
    d = spec.dimension
    n = int(sample_budget)

    def ball(m):
        u = rng.standard_normal((m, d))
        u /= np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-300)
        r = radius * rng.random((m, 1)) ** (1.0 / d)
        return u * r

    xs, vs = ball(n), ball(n)
    rs = np.linalg.norm(xs, axis=1)

    checks = []

    # A1: finite-difference Lipschitz ratios for phi, g, f over sampled pairs.
    xs2, vs2 = ball(n), ball(n)
    dx = np.linalg.norm(xs - xs2, axis=1)
    dv = np.linalg.norm(vs - vs2, axis=1)
    keep_x = dx >= 1e-6
    keep_v = dv >= 1e-6
    ratios = []
    if np.any(keep_x):
        p1 = eval_phi(spec.kernel, np.linalg.norm(xs[keep_x], axis=1))
        p2 = eval_phi(spec.kernel, np.linalg.norm(xs2[keep_x], axis=1))
        ratios.append(np.max(np.abs(p1 - p2) / dx[keep_x]))
        f1 = eval_repulsion(spec.repulsion, xs[keep_x])
        f2 = eval_repulsion(spec.repulsion, xs2[keep_x])
        ratios.append(np.max(np.linalg.norm(f1 - f2, axis=1) / dx[keep_x]))
    if np.any(keep_v):
        g1 = eval_g(spec.coupling, vs[keep_v])
        g2 = eval_g(spec.coupling, vs2[keep_v])
        ratios.append(np.max(np.linalg.norm(g1 - g2, axis=1) / dv[keep_v]))
    lip = float(max(ratios)) if ratios else 0.0
    checks.append(AssumptionCheck(
        "A1_local_lipschitz", lip < _LIPSCHITZ_CAP, lip,
        note="max sampled finite-difference ratio over ingredient functions"))

    # A2a: oddness of the coupling.
    godd = np.max(np.linalg.norm(
        eval_g(spec.coupling, vs) + eval_g(spec.coupling, -vs), axis=1))
    checks.append(AssumptionCheck("A2a_odd", godd == 0.0, float(godd)))

    # A2b: coercivity g(v).v >= |v|^(2*alpha).
    gv = np.sum(eval_g(spec.coupling, vs) * vs, axis=1)
    vnorm = np.linalg.norm(vs, axis=1)
    margin = gv - spec.g_star * vnorm ** (2.0 * spec.alpha)
    worst = int(np.argmin(margin))
    checks.append(AssumptionCheck(
        "A2b_coercive", bool(margin[worst] >= -1e-12), float(margin[worst]),
        witness=(tuple(vs[worst]),)))

    # A3: kernel lower bound on the sampled ball; the boundary point is
    # always included since both presets are monotone in |x|.
    rs_a3 = np.append(rs, radius)
    phi_a3 = eval_phi(spec.kernel, rs_a3)
    wi = int(np.argmin(phi_a3))
    phi_min = float(phi_a3[wi])
    checks.append(AssumptionCheck(
        "A3_phi_lower_bound", phi_min >= spec.phi_star - 1e-12, phi_min,
        witness=(float(rs_a3[wi]),),
        note=f"min of phi over sampled |x| <= {radius}"))

    # A3: repulsion bound |f(|x|^2) x| <= f_star.
    fnorm = np.linalg.norm(eval_repulsion(spec.repulsion, xs), axis=1)
    fmax = float(np.max(fnorm))
    checks.append(AssumptionCheck(
        "A3_repulsion_bound", fmax <= spec.f_star + 1e-12, fmax))

    # A3: smallness of the repulsion cap.
    small = 2.0 ** (spec.alpha - 0.5) * spec.phi_star * spec.g_star
    checks.append(AssumptionCheck(
        "A3_smallness", spec.f_star < small, float(small - spec.f_star),
        note="margin 2^(alpha-1/2)*phi_star - f_star"))

    # A4: linear growth of phi(|x|) g(v); the fitted constant is reported.
    prod = phi_a3[:-1, None] * eval_g(spec.coupling, vs)
    growth = np.linalg.norm(prod, axis=1) / (1.0 + rs + vnorm)
    cfit = float(np.max(growth))
    checks.append(AssumptionCheck(
        "A4_linear_growth", math.isfinite(cfit), cfit,
        note="fitted constant in |phi(|x|) g(v)| <= C (1 + |x| + |v|)"))

    return AssumptionReport(radius=radius, sample_budget=n, seed=seed,
                            checks=tuple(checks))
