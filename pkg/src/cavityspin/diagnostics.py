"""Energy bookkeeping, conservation tracking and time-series records.

The energy convention is the squared-norm one (no 1/2 factor):
E = ||u||^2 - omega_tilde . I omega_tilde + omega_bar . I omega_bar, which
splits into the rigid part E_bar and the nonnegative relative part
E_tilde.  The dissipation ledger audited by the budget is 2 nu ||grad u||^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .coupling import CoupledState, InertiaOps
from .fluid import fluid_kinetic_energy, mean_velocity

__all__ = [
    "EnergyBreakdown",
    "TimeSeriesRecord",
    "ConservationReport",
    "BudgetReport",
    "RunRefs",
    "energy_breakdown",
    "make_record",
    "energy_budget",
    "conservation_report",
    "decay_fit",
    "CSV_FIELDS",
    "write_csv",
    "read_csv",
]


@dataclass(frozen=True)
class EnergyBreakdown:
    """Total energy and its rigid/relative split."""

    E: float
    E_bar: float
    E_tilde: float
    u_l2sq: float

    @classmethod
    def from_parts(cls, u_l2sq: float, tilde_quad: float,
                   bar_quad: float) -> "EnergyBreakdown":
        """Assemble from ||u||^2, omega_tilde.I omega_tilde, omega_bar.I omega_bar."""
        e_tilde = u_l2sq - tilde_quad
        return cls(E=bar_quad + e_tilde, E_bar=bar_quad, E_tilde=e_tilde,
                   u_l2sq=u_l2sq)


def energy_breakdown(state: CoupledState, inertia: InertiaOps) -> EnergyBreakdown:
    u2 = fluid_kinetic_energy(state.fluid)
    bar_quad = float(state.omega_bar @ inertia.apply(state.omega_bar))
    tilde_quad = float(state.omega_tilde @ inertia.apply(state.omega_tilde))
    return EnergyBreakdown.from_parts(u2, tilde_quad, bar_quad)


CSV_FIELDS = [
    "t", "E", "E_bar", "E_tilde", "u_l2sq", "diss_rate", "diss_cum",
    "A1", "A2", "A3", "absA_drift", "QA_drift", "absL_drift",
    "Om1", "Om2", "Om3", "Ombar1", "Ombar2", "Ombar3", "mean_u_abs",
    "ang1_deg", "ang2_deg", "ang3_deg", "picard_iters",
]


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    E: float
    E_bar: float
    E_tilde: float
    u_l2sq: float
    diss_rate: float
    diss_cum: float
    A1: float
    A2: float
    A3: float
    absA_drift: float
    QA_drift: float
    absL_drift: float
    Om1: float
    Om2: float
    Om3: float
    Ombar1: float
    Ombar2: float
    Ombar3: float
    mean_u_abs: float
    ang1_deg: float
    ang2_deg: float
    ang3_deg: float
    picard_iters: int

    @property
    def A(self) -> np.ndarray:
        return np.array([self.A1, self.A2, self.A3])

    @property
    def omega(self) -> np.ndarray:
        return np.array([self.Om1, self.Om2, self.Om3])

    @property
    def omega_bar(self) -> np.ndarray:
        return np.array([self.Ombar1, self.Ombar2, self.Ombar3])

    @property
    def angles_deg(self) -> np.ndarray:
        return np.array([self.ang1_deg, self.ang2_deg, self.ang3_deg])


@dataclass(frozen=True)
class RunRefs:
    """Initial values the per-record drifts are measured against."""

    absA0: float
    A0_inertial: np.ndarray
    absL0: float


def axis_angles_deg(omega: np.ndarray, inertia: InertiaOps) -> np.ndarray:
    """Angle between omega and each principal axis line, in degrees."""
    norm = float(np.linalg.norm(omega))
    if norm == 0.0:
        return np.full(3, np.nan)
    cosines = np.abs(inertia.axes.T @ (omega / norm))
    return np.degrees(np.arccos(np.clip(cosines, -1.0, 1.0)))


def make_record(state: CoupledState, inertia: InertiaOps, refs: RunRefs,
                diss_rate: float, diss_cum: float,
                picard_iters: int) -> TimeSeriesRecord:
    e = energy_breakdown(state, inertia)
    A = state.rigid.A
    absA = float(np.linalg.norm(A))
    absA_drift = abs(absA / refs.absA0 - 1.0) if refs.absA0 > 0 else absA
    qa = state.rigid.Q @ A
    qa_drift = (np.linalg.norm(qa - refs.A0_inertial) / refs.absA0
                if refs.absA0 > 0 else float(np.linalg.norm(qa)))
    absL = float(np.linalg.norm(state.rigid.L))
    absL_drift = abs(absL / refs.absL0 - 1.0) if refs.absL0 > 0 else absL
    ang = axis_angles_deg(state.omega, inertia)
    mean_u = mean_velocity(state.fluid)
    return TimeSeriesRecord(
        t=state.t, E=e.E, E_bar=e.E_bar, E_tilde=e.E_tilde, u_l2sq=e.u_l2sq,
        diss_rate=diss_rate, diss_cum=diss_cum,
        A1=float(A[0]), A2=float(A[1]), A3=float(A[2]),
        absA_drift=absA_drift, QA_drift=float(qa_drift), absL_drift=absL_drift,
        Om1=float(state.omega[0]), Om2=float(state.omega[1]),
        Om3=float(state.omega[2]),
        Ombar1=float(state.omega_bar[0]), Ombar2=float(state.omega_bar[1]),
        Ombar3=float(state.omega_bar[2]),
        mean_u_abs=float(np.linalg.norm(mean_u)),
        ang1_deg=float(ang[0]), ang2_deg=float(ang[1]), ang3_deg=float(ang[2]),
        picard_iters=int(picard_iters),
    )


@dataclass(frozen=True)
class ConservationReport:
    max_absA_drift: float
    final_absA_drift: float
    max_QA_drift: float
    final_QA_drift: float
    max_absL_drift: float
    final_absL_drift: float
    max_mean_u_abs: float

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def conservation_report(records) -> ConservationReport:
    if not records:
        raise ValueError("empty history")
    return ConservationReport(
        max_absA_drift=max(r.absA_drift for r in records),
        final_absA_drift=records[-1].absA_drift,
        max_QA_drift=max(r.QA_drift for r in records),
        final_QA_drift=records[-1].QA_drift,
        max_absL_drift=max(r.absL_drift for r in records),
        final_absL_drift=records[-1].absL_drift,
        max_mean_u_abs=max(r.mean_u_abs for r in records),
    )


@dataclass(frozen=True)
class BudgetReport:
    """How well E(t) + cumulative dissipation tracks E(0)."""

    max_residual: float
    final_residual: float
    monotonicity_violations: int
    max_step_increase: float  # worst per-step E increase, relative to E(0)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def energy_budget(records, steps_per_record: int = 1,
                  step_slack_rel: float = 1e-6) -> BudgetReport:
    """Audit the energy equation over an evenly spaced history.

    The cumulative dissipation is the trapezoid-rule integral; records
    produced by the run loop already carry the per-step accumulation in
    diss_cum and those values are used directly.  A record-to-record energy
    increase larger than steps_per_record * step_slack_rel * E(0) counts as
    a monotonicity violation.
    """
    if not records:
        raise ValueError("empty history")
    t = np.array([r.t for r in records])
    if len(t) > 2:
        dt = np.diff(t)
        if np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1e-300):
            raise ValueError("records must be evenly spaced in t")
    E0 = records[0].E
    scale = abs(E0) if E0 != 0 else 1.0
    residuals = [abs(r.E + r.diss_cum - E0) / scale for r in records]
    violations = 0
    max_step_increase = 0.0
    slack = step_slack_rel * scale * steps_per_record
    for prev, cur in zip(records, records[1:]):
        rise = cur.E - prev.E
        if rise > slack:
            violations += 1
        max_step_increase = max(max_step_increase,
                                rise / steps_per_record / scale)
    return BudgetReport(max_residual=max(residuals),
                        final_residual=residuals[-1],
                        monotonicity_violations=violations,
                        max_step_increase=max_step_increase)


def cumulative_dissipation(records) -> np.ndarray:
    """Trapezoid-rule integral of diss_rate over the record times."""
    t = np.array([r.t for r in records])
    d = np.array([r.diss_rate for r in records])
    out = np.zeros_like(t)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(t))
    return out


def decay_fit(records, window=None):
    """Least-squares slope of log E_tilde over a time window.

    window is (t_lo, t_hi); None uses the whole history.  Returns
    (rate, r_squared).  Raises if any E_tilde in the window is not positive.
    """
    if window is None:
        chosen = list(records)
    else:
        t_lo, t_hi = window
        chosen = [r for r in records if t_lo <= r.t <= t_hi]
    if len(chosen) < 2:
        raise ValueError("decay window holds fewer than two samples")
    e = np.array([r.E_tilde for r in chosen])
    if np.any(e <= 0.0):
        raise ValueError("E_tilde must be positive throughout the window")
    t = np.array([r.t for r in chosen])
    y = np.log(e)
    slope, intercept = np.polyfit(t, y, 1)
    fit = slope * t + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_sq = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else (
        0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot)
    return float(slope), float(r_sq)


# -- delimited output --------------------------------------------------------


def _format(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, records) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(CSV_FIELDS) + "\n")
        for r in records:
            fh.write(",".join(_format(getattr(r, name))
                              for name in CSV_FIELDS) + "\n")


def read_csv(path):
    records = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        if header != CSV_FIELDS:
            raise ValueError(f"unexpected CSV header in {path}")
        for line in fh:
            parts = line.strip().split(",")
            values = {name: (int(tok) if name == "picard_iters" else float(tok))
                      for name, tok in zip(CSV_FIELDS, parts)}
            records.append(TimeSeriesRecord(**values))
    return records
