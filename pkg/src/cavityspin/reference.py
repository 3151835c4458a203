"""Reference configurations shipped with the repository.

Four regimes: an oblate body with a degenerate eigenvalue pair (ref-egg),
a fully split spectrum (ref-gen), an isotropic cube-in-cube (ref-sphere),
and a zero-momentum run (ref-ortho).  The walls are thin and the spin
brisk so the precession-driven dissipation settles the axis within a
desk-scale run; the fluid share of the inertia is roughly half.
"""

from __future__ import annotations

import json
from pathlib import Path

from .config import RunConfig
from .fluid import InitSpec
from .geometry import GeometrySpec

__all__ = ["REFERENCE_NAMES", "reference_config", "write_reference_configs"]

REFERENCE_NAMES = ("ref-egg", "ref-gen", "ref-sphere", "ref-ortho")


def _egg_geometry() -> GeometrySpec:
    return GeometrySpec(outer_half_extents=(0.6, 0.6, 0.4),
                        cavity_half_extents=(0.55, 0.55, 0.35),
                        cavity_offset=(0.0, 0.0, 0.0),
                        rho_B=1.2, nu=0.5)


def _gen_geometry() -> GeometrySpec:
    return GeometrySpec(outer_half_extents=(0.7, 0.6, 0.42),
                        cavity_half_extents=(0.65, 0.55, 0.36),
                        cavity_offset=(0.0, 0.0, 0.0),
                        rho_B=1.2, nu=0.5)


def _sphere_geometry() -> GeometrySpec:
    return GeometrySpec(outer_half_extents=(0.5, 0.5, 0.5),
                        cavity_half_extents=(0.42, 0.42, 0.42),
                        cavity_offset=(0.0, 0.0, 0.0),
                        rho_B=2.0, nu=0.5)


def reference_config(name: str, resolution: int = 16) -> RunConfig:
    if name == "ref-egg":
        return RunConfig(
            geometry=_egg_geometry(),
            resolution=(resolution,) * 3,
            init=InitSpec(kind="random", seed=7, amplitude=0.5),
            omega_bar0=(1.5, 0.0, 8.0),
            A0=None,
            t_end=12.0,
            sample_interval=0.02,
            dt_safety=0.85,
            label="ref-egg",
        )
    if name == "ref-gen":
        return RunConfig(
            geometry=_gen_geometry(),
            resolution=(resolution,) * 3,
            init=InitSpec(kind="random", seed=11, amplitude=0.5),
            omega_bar0=(1.2, 0.8, 8.0),
            A0=None,
            t_end=12.0,
            sample_interval=0.02,
            dt_safety=0.85,
            label="ref-gen",
        )
    if name == "ref-sphere":
        return RunConfig(
            geometry=_sphere_geometry(),
            resolution=(resolution,) * 3,
            init=InitSpec(kind="random", seed=13, amplitude=1e-5),
            omega_bar0=(0.7, 0.7, 0.7),
            A0=None,
            t_end=1.2,
            sample_interval=0.01,
            dt_safety=0.85,
            label="ref-sphere",
        )
    if name == "ref-ortho":
        return RunConfig(
            geometry=_egg_geometry(),
            resolution=(resolution,) * 3,
            init=InitSpec(kind="vortex", axis=3, amplitude=0.5),
            omega_bar0=None,
            A0=(0.0, 0.0, 0.0),
            t_end=0.8,
            sample_interval=0.01,
            dt_safety=0.85,
            label="ref-ortho",
        )
    raise ValueError(f"unknown reference config {name!r}; "
                     f"choose from {REFERENCE_NAMES}")


def write_reference_configs(directory) -> list:
    """Write the shipped JSON files; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in REFERENCE_NAMES:
        cfg = reference_config(name)
        path = directory / f"{name.replace('-', '_')}.json"
        path.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        paths.append(path)
    return paths
