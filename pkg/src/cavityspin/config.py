"""Run configuration: JSON schema, validation, serialization."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .fluid import InitSpec
from .geometry import GeometryError, GeometrySpec

__all__ = ["ConfigError", "Tolerances", "RunConfig", "load_config"]


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending key."""


@dataclass(frozen=True)
class Tolerances:
    """Numerics and verdict tolerances, all overridable from the config."""

    picard_tol: float | None = None  # None: 1e-10 * max(|Omega|, 1) per step
    max_picard: int = 50
    cg_tol: float = 1e-12
    angle_tol_deg: float = 5.0
    res_tol: float = 1e-2
    u_tol_rel: float = 1e-2
    degeneracy_rtol: float = 1e-9
    budget_slack_rel: float = 1e-6

    def __post_init__(self):
        for name in ("picard_tol", "cg_tol", "angle_tol_deg", "res_tol",
                     "u_tol_rel", "degeneracy_rtol", "budget_slack_rel"):
            value = getattr(self, name)
            if value is None and name == "picard_tol":
                continue
            if not (value > 0):
                raise ConfigError(f"tolerances.{name} must be positive")
        if self.max_picard < 1:
            raise ConfigError("tolerances.max_picard must be at least 1")


def _vec3(value, key: str) -> tuple:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ConfigError(f"{key} must be a 3-vector")
    return tuple(float(x) for x in arr)


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one simulation."""

    geometry: GeometrySpec
    resolution: tuple
    init: InitSpec
    omega_bar0: tuple | None
    A0: tuple | None
    L0: tuple = (0.0, 0.0, 0.0)
    dt: float | None = None
    dt_safety: float = 0.45
    t_end: float = 1.0
    sample_interval: float = 0.1
    tolerances: Tolerances = field(default_factory=Tolerances)
    dry_run: bool = False
    label: str = ""

    def __post_init__(self):
        if (self.omega_bar0 is None) == (self.A0 is None):
            raise ConfigError(
                "exactly one of initial.omega_bar0 / initial.A0 must be given")
        if self.t_end <= 0:
            raise ConfigError("time.t_end must be positive")
        if self.sample_interval <= 0:
            raise ConfigError("time.sample_interval must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("time.dt must be positive")
        if self.dt is not None and self.sample_interval < self.dt:
            raise ConfigError("time.sample_interval must be at least time.dt")
        if not (0.0 < self.dt_safety <= 1.0):
            raise ConfigError("time.dt_safety must lie in (0, 1]")
        if any(n < 4 for n in self.resolution):
            raise ConfigError("grid.resolution entries must be at least 4")

    def to_dict(self) -> dict:
        initial = {
            "velocity": {
                "kind": self.init.kind,
                "seed": self.init.seed,
                "amplitude": self.init.amplitude,
                "axis": self.init.axis,
            },
            "L0": list(self.L0),
        }
        if self.omega_bar0 is not None:
            initial["omega_bar0"] = list(self.omega_bar0)
        if self.A0 is not None:
            initial["A0"] = list(self.A0)
        return {
            "label": self.label,
            "geometry": self.geometry.to_dict(),
            "grid": {"resolution": list(self.resolution)},
            "initial": initial,
            "time": {
                "t_end": self.t_end,
                "sample_interval": self.sample_interval,
                "dt": self.dt,
                "dt_safety": self.dt_safety,
            },
            "tolerances": {
                "picard_tol": self.tolerances.picard_tol,
                "max_picard": self.tolerances.max_picard,
                "cg_tol": self.tolerances.cg_tol,
                "angle_tol_deg": self.tolerances.angle_tol_deg,
                "res_tol": self.tolerances.res_tol,
                "u_tol_rel": self.tolerances.u_tol_rel,
                "degeneracy_rtol": self.tolerances.degeneracy_rtol,
                "budget_slack_rel": self.tolerances.budget_slack_rel,
            },
            "dry_run": self.dry_run,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for key in ("geometry", "grid", "initial", "time"):
            if key not in data:
                raise ConfigError(f"config missing section {key!r}")
        try:
            geometry = GeometrySpec.from_dict(data["geometry"])
        except GeometryError as err:
            raise ConfigError(f"geometry: {err}") from err

        grid = data["grid"]
        if "resolution" not in grid:
            raise ConfigError("grid.resolution is required")
        res = grid["resolution"]
        if np.isscalar(res):
            resolution = (int(res),) * 3
        else:
            if len(res) != 3:
                raise ConfigError("grid.resolution must be an int or 3 ints")
            resolution = tuple(int(r) for r in res)

        initial = data["initial"]
        vel = initial.get("velocity", {"kind": "zero"})
        try:
            init = InitSpec(kind=vel.get("kind", "zero"),
                            seed=int(vel.get("seed", 0)),
                            amplitude=float(vel.get("amplitude", 0.0)),
                            axis=int(vel.get("axis", 3)))
        except GeometryError as err:
            raise ConfigError(f"initial.velocity: {err}") from err
        omega_bar0 = (_vec3(initial["omega_bar0"], "initial.omega_bar0")
                      if initial.get("omega_bar0") is not None else None)
        A0 = (_vec3(initial["A0"], "initial.A0")
              if initial.get("A0") is not None else None)
        L0 = _vec3(initial.get("L0", (0.0, 0.0, 0.0)), "initial.L0")

        time = data["time"]
        if "t_end" not in time:
            raise ConfigError("time.t_end is required")
        if "sample_interval" not in time:
            raise ConfigError("time.sample_interval is required")

        tol_data = data.get("tolerances", {}) or {}
        known = {"picard_tol", "max_picard", "cg_tol", "angle_tol_deg",
                 "res_tol", "u_tol_rel", "degeneracy_rtol", "budget_slack_rel"}
        unknown = set(tol_data) - known
        if unknown:
            raise ConfigError(f"tolerances: unknown keys {sorted(unknown)}")
        tolerances = Tolerances(**tol_data)

        return cls(
            geometry=geometry,
            resolution=resolution,
            init=init,
            omega_bar0=omega_bar0,
            A0=A0,
            L0=L0,
            dt=None if time.get("dt") is None else float(time["dt"]),
            dt_safety=float(time.get("dt_safety", 0.45)),
            t_end=float(time["t_end"]),
            sample_interval=float(time["sample_interval"]),
            tolerances=tolerances,
            dry_run=bool(data.get("dry_run", False)),
            label=str(data.get("label", "")),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def with_updates(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    return RunConfig.from_dict(data)
