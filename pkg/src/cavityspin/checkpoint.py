"""Flat-binary fluid checkpoints with a JSON sidecar.

Binary layout, little-endian: n as 3 int64, h as 3 float64, corner as
3 float64, then the u, v, w face arrays as float64 in x-fastest order.
The sidecar carries the config hash, step index, rigid state and the
running diagnostics accumulators needed for an exact resume.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import ConfigError
from .coupling import CoupledState, InertiaOps, RigidState, make_coupled_state
from .fluid import FluidState, MacGrid

__all__ = ["save_checkpoint", "load_checkpoint"]

FORMAT_VERSION = 1


def _binary_blob(state: FluidState) -> bytes:
    grid = state.grid
    parts = [
        np.asarray(grid.n, dtype="<i8").tobytes(),
        np.asarray(grid.h, dtype="<f8").tobytes(),
        np.asarray(grid.corner, dtype="<f8").tobytes(),
    ]
    for arr in state.components():
        parts.append(np.asarray(arr, dtype="<f8").flatten(order="F").tobytes())
    return b"".join(parts)


def save_checkpoint(path_base, state: CoupledState, config_sha256: str,
                    diag: dict) -> tuple:
    """Write <base>.bin and <base>.json; returns both paths."""
    base = Path(path_base)
    bin_path = base.with_suffix(".bin")
    json_path = base.with_suffix(".json")
    bin_path.write_bytes(_binary_blob(state.fluid))
    sidecar = {
        "format_version": FORMAT_VERSION,
        "config_sha256": config_sha256,
        "step_index": state.step_index,
        "t": state.t,
        "rigid": {
            "A": list(map(float, state.rigid.A)),
            "L": list(map(float, state.rigid.L)),
            "Q": [list(map(float, row)) for row in state.rigid.Q],
        },
        "diag": dict(diag),
    }
    json_path.write_text(json.dumps(sidecar, indent=2))
    return bin_path, json_path


def load_checkpoint(path_base, grid: MacGrid, inertia: InertiaOps,
                    config_sha256: str | None = None):
    """Rebuild a CoupledState from a checkpoint pair.

    The stored grid must match the grid implied by the config; a config
    hash mismatch is rejected when a hash is supplied.
    Returns (state, diag_dict).
    """
    base = Path(path_base)
    if base.suffix in (".bin", ".json"):
        base = base.with_suffix("")
    bin_path = base.with_suffix(".bin")
    json_path = base.with_suffix(".json")
    if not bin_path.exists() or not json_path.exists():
        raise ConfigError(f"checkpoint pair not found at {base}.bin/.json")

    sidecar = json.loads(json_path.read_text())
    if sidecar.get("format_version") != FORMAT_VERSION:
        raise ConfigError("unsupported checkpoint format version")
    if config_sha256 is not None and sidecar["config_sha256"] != config_sha256:
        raise ConfigError(
            "checkpoint was produced by a different config "
            f"(hash {sidecar['config_sha256'][:12]}..., "
            f"expected {config_sha256[:12]}...)")

    raw = bin_path.read_bytes()
    off = 0
    n = np.frombuffer(raw, dtype="<i8", count=3, offset=off)
    off += 3 * 8
    h = np.frombuffer(raw, dtype="<f8", count=3, offset=off)
    off += 3 * 8
    corner = np.frombuffer(raw, dtype="<f8", count=3, offset=off)
    off += 3 * 8
    if tuple(n) != tuple(grid.n) or not np.allclose(h, grid.h, rtol=1e-14) \
            or not np.allclose(corner, grid.corner, rtol=1e-14, atol=1e-300):
        raise ConfigError("checkpoint grid does not match the config grid")

    comps = []
    for comp in range(3):
        shape = grid.component_shape(comp)
        count = int(np.prod(shape))
        flat = np.frombuffer(raw, dtype="<f8", count=count, offset=off)
        off += count * 8
        comps.append(flat.reshape(shape, order="F").copy())

    fluid = FluidState(grid, comps[0], comps[1], comps[2], np.zeros(grid.n))
    rigid = RigidState(A=np.asarray(sidecar["rigid"]["A"], dtype=float),
                       L=np.asarray(sidecar["rigid"]["L"], dtype=float),
                       Q=np.asarray(sidecar["rigid"]["Q"], dtype=float))
    state = make_coupled_state(float(sidecar["t"]), fluid, rigid, inertia,
                               step_index=int(sidecar["step_index"]))
    return state, dict(sidecar.get("diag", {}))
