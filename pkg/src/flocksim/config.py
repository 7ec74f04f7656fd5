"""Run configuration: strict TOML schema with labeled seed derivation.

Configs are TOML with nested sections; unknown keys anywhere are hard
errors so a typo in a tolerance key cannot silently weaken a verdict.  One
root seed drives everything; per-purpose seeds are derived by hashing the
root with a label.
"""

from __future__ import annotations

import hashlib
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field

from .dynamics import IntegratorConfig
from .kinetic import InitialSpec
from .model import CouplingSpec, KernelSpec, ModelSpec, RepulsionSpec
from .transport import GroundMetric


class ConfigError(ValueError):
    """Raised on schema violations; the message names the offending key."""


def derive_seed(root: int, label: str) -> int:
    digest = hashlib.sha256(f"{root}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 63)


_SCHEMA = {
    "seed": int,
    "model": {
        "dimension": int,
        "alpha": float,
        "phi_star": float,
        "kernel": {"preset": str, "level": float, "amplitude": float, "decay": float},
        "coupling": {"preset": str, "exponent": float},
        "repulsion": {"preset": str, "cap": float, "softening": float},
    },
    "initial": {
        "preset": str, "n": int, "radius_x": float, "radius_v": float,
        "center_x": list, "center_v": list, "sigma_x": float, "sigma_v": float,
        "truncation_x": float, "truncation_v": float, "cluster_offset": list,
    },
    "integrator": {
        "dt": float, "t_end": float, "error_tol": float,
        "max_steps": int, "observer_stride": int,
    },
    "output": {"metric": str, "snapshot_stride": int},
    "verify": {
        "rel_tol": float, "gamma_window": float, "plateau_frac": float,
        "c_cap": float, "flocking_t": float,
        "stability": {"perturbations": list, "times": list},
        "meanfield": {"n_list": list, "t_eval": float, "seeds": int},
    },
}


def _check_keys(data: dict, schema: dict, path: str = "") -> None:
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key: {where}")
        expected = schema[key]
        if isinstance(expected, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected a section")
            _check_keys(value, expected, where)
        elif expected is float:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{where}: expected a number")
        elif not isinstance(value, expected) or isinstance(value, bool):
            raise ConfigError(f"{where}: expected {expected.__name__}")


@dataclass
class RunConfig:
    seed: int
    model: ModelSpec
    initial: InitialSpec
    integrator: IntegratorConfig
    metric: GroundMetric
    snapshot_stride: int = 1
    verify: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def resolved_json(self) -> str:
        payload = {
            "seed": self.seed,
            "model": asdict(self.model),
            "initial": asdict(self.initial),
            "integrator": asdict(self.integrator),
            "output": {"metric": self.metric.kind,
                       "snapshot_stride": self.snapshot_stride},
            "verify": self.verify,
        }
        return json.dumps(payload, indent=2, sort_keys=True, default=list) + "\n"


def load_config(path: str, seed_override: int | None = None) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    _check_keys(data, _SCHEMA)
    return build_config(data, seed_override)


def build_config(data: dict, seed_override: int | None = None) -> RunConfig:
    try:
        seed = seed_override if seed_override is not None else data.get("seed", 0)
        msec = data.get("model", {})
        kernel = KernelSpec(**msec.get("kernel", {}))
        coupling = CouplingSpec(**msec.get("coupling", {}))
        repulsion = RepulsionSpec(**msec.get("repulsion", {}))
        model = ModelSpec(
            dimension=msec.get("dimension", 2),
            kernel=kernel, coupling=coupling, repulsion=repulsion,
            alpha=msec.get("alpha", coupling.exponent),
            phi_star=msec.get("phi_star", 1.0),
        )
        isec = dict(data.get("initial", {}))
        for key in ("center_x", "center_v", "cluster_offset"):
            if key in isec:
                isec[key] = tuple(float(v) for v in isec[key])
        initial = InitialSpec(d=model.dimension,
                              seed=derive_seed(seed, "initial"), **isec)
        integ = IntegratorConfig(**data.get("integrator", {}))
        osec = data.get("output", {})
        metric_name = osec.get("metric", "euclidean")
        if metric_name == "euclidean":
            metric = GroundMetric("euclidean")
        elif metric_name == "sum":
            metric = GroundMetric("sum_of_norms", x_dim=model.dimension)
        else:
            raise ConfigError(f"output.metric: unknown metric {metric_name!r}")
        return RunConfig(seed=seed, model=model, initial=initial,
                         integrator=integ, metric=metric,
                         snapshot_stride=osec.get("snapshot_stride", 1),
                         verify=data.get("verify", {}), raw=data)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
