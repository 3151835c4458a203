"""Figure rendering for run artifacts.

Reads the delimited time series a run wrote and renders the standard
report figures next to it: energy split, spin components, angles to the
principal axes, conservation drifts, and the energy-budget residual.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .diagnostics import read_csv  # noqa: E402

__all__ = ["render_figures"]


def _positive(values):
    v = np.asarray(values, dtype=float)
    return np.where(v > 0, v, np.nan)


def render_figures(csv_path, out_dir=None, stem: str = "") -> list:
    """Render report figures for one run; returns the written paths.

    Figures land next to the CSV unless out_dir says otherwise.
    """
    csv_path = Path(csv_path)
    out = Path(out_dir) if out_dir is not None else csv_path.parent
    out.mkdir(parents=True, exist_ok=True)
    records = read_csv(csv_path)
    t = np.array([r.t for r in records])
    prefix = f"{stem}_" if stem else ""
    written = []

    def save(fig, name):
        path = out / f"{prefix}{name}.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    # energy split
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(t, [r.E for r in records], label="E", lw=1.4)
    ax.plot(t, [r.E_bar for r in records], label="rigid part", lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax2 = ax.twinx()
    ax2.semilogy(t, _positive([r.E_tilde for r in records]), color="tab:red",
                 lw=1.0, label="relative part (right)")
    ax2.set_ylabel("relative energy")
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, fontsize=8, loc="center right")
    ax.set_title("kinetic energy")
    save(fig, "energy")

    # spin components
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for name, series in (("$\\Omega_1$", [r.Om1 for r in records]),
                         ("$\\Omega_2$", [r.Om2 for r in records]),
                         ("$\\Omega_3$", [r.Om3 for r in records])):
        ax.plot(t, series, lw=1.0, label=name)
    ax.plot(t, [np.linalg.norm(r.omega) for r in records], "k--", lw=0.8,
            label="$|\\Omega|$")
    ax.set_xlabel("t")
    ax.set_ylabel("angular velocity")
    ax.legend(fontsize=8, ncol=4)
    ax.set_title("spin in the body frame")
    save(fig, "omega")

    # angle to each principal axis
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for j, series in ((1, [r.ang1_deg for r in records]),
                      (2, [r.ang2_deg for r in records]),
                      (3, [r.ang3_deg for r in records])):
        ax.plot(t, series, lw=1.0, label=f"axis {j}")
    ax.set_xlabel("t")
    ax.set_ylabel("angle [deg]")
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=8)
    ax.set_title("angle between the spin and the principal axes")
    save(fig, "angles")

    # conservation drifts
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.semilogy(t, _positive([r.absA_drift for r in records]), lw=1.0,
                label="|A| drift")
    ax.semilogy(t, _positive([r.QA_drift for r in records]), lw=1.0,
                label="inertial momentum drift")
    ax.semilogy(t, _positive([r.absL_drift for r in records]), lw=1.0,
                label="|L| drift")
    ax.semilogy(t, _positive([r.mean_u_abs for r in records]), lw=1.0,
                label="|mean u|")
    ax.set_xlabel("t")
    ax.set_ylabel("relative drift")
    ax.legend(fontsize=8)
    ax.set_title("conserved-quantity drifts")
    save(fig, "conservation")

    # energy budget residual
    E0 = records[0].E
    scale = abs(E0) if E0 != 0 else 1.0
    resid = [abs(r.E + r.diss_cum - E0) / scale for r in records]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(t, resid, lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("|E + dissipated - E(0)| / E(0)")
    ax.set_title("energy-budget residual")
    save(fig, "budget")

    return written
