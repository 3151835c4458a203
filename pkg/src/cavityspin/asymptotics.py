"""Terminal-state classification, a-priori axis prediction, and scaling.

A trajectory settles when the relative fluid motion has died out and the
angular velocity sits on a principal axis of the structure's inertia
tensor.  The classifier scores the tail of a run against that picture;
the predictor evaluates the initial-data inequalities that decide the
limit axis ahead of time in the degenerate and fully split spectra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, RunConfig
from .coupling import InertiaOps

__all__ = [
    "ClassifyTolerances",
    "AxisVerdict",
    "PredictionReport",
    "classify_limit",
    "predict_axis",
    "predict_from_inertia",
    "scaling_transform",
]

VERDICT_LARGEST = "largest_axis_guaranteed"
VERDICT_NO_SMALLEST = "smallest_axis_excluded"
VERDICT_OPEN = "inconclusive"


@dataclass(frozen=True)
class ClassifyTolerances:
    angle_tol_deg: float = 5.0
    res_tol: float = 1e-2
    u_tol_rel: float = 1e-2

    def __post_init__(self):
        for name in ("angle_tol_deg", "res_tol", "u_tol_rel"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class AxisVerdict:
    """Where the trajectory ended up, measured on its final window."""

    converged: bool
    axis_index: int | None  # 1-based; None for a degenerate eigenspace
    mu: float               # signed terminal speed, Omega_inf ~ mu * axis
    final_angle_deg: float
    mean_angle_deg: float
    residual: float          # |Omega x I Omega| / (|Omega| |I Omega|), window mean
    inertia_mismatch: float  # | |I Omega(T)| - |A0| | / |A0|
    degenerate_axes: tuple | None = None

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "axis_index": self.axis_index,
            "mu": self.mu,
            "final_angle_deg": self.final_angle_deg,
            "mean_angle_deg": self.mean_angle_deg,
            "residual": self.residual,
            "inertia_mismatch": self.inertia_mismatch,
            "degenerate_axes": (list(self.degenerate_axes)
                                if self.degenerate_axes else None),
        }


def _line_angle_deg(omega: np.ndarray, direction: np.ndarray) -> float:
    norm = float(np.linalg.norm(omega))
    if norm == 0.0:
        return float("nan")
    c = abs(float(np.dot(omega, direction))) / norm
    return math.degrees(math.acos(min(1.0, c)))


def _subspace_angle_deg(omega: np.ndarray, basis: np.ndarray) -> float:
    norm = float(np.linalg.norm(omega))
    if norm == 0.0:
        return float("nan")
    proj = basis @ (basis.T @ omega)
    c = min(1.0, float(np.linalg.norm(proj)) / norm)
    return math.degrees(math.acos(c))


def _rho(omega: np.ndarray, inertia: InertiaOps) -> float:
    Io = inertia.apply(omega)
    denom = float(np.linalg.norm(omega)) * float(np.linalg.norm(Io))
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(np.cross(omega, Io))) / denom


def classify_limit(records, inertia: InertiaOps,
                   tol: ClassifyTolerances | None = None) -> AxisVerdict:
    """Score the final 10% of a run against the steady-rotation picture.

    The candidate axis minimizes the time-averaged angle between Omega and
    the principal-axis lines; convergence additionally requires the
    eigenvector residual and the relative-velocity norm to sit under their
    tolerances on that window.  If the winning eigenvalue is degenerate the
    whole eigenspace is reported and axis_index is None.
    """
    if not records:
        raise ValueError("empty history")
    tol = tol or ClassifyTolerances()

    count = max(2, math.ceil(0.1 * len(records)))
    window = records[-min(count, len(records)):]
    absA0 = float(np.linalg.norm(records[0].A))
    u0 = math.sqrt(max(records[0].u_l2sq, 0.0))
    u_final = math.sqrt(max(records[-1].u_l2sq, 0.0))
    u_ok = u_final <= tol.u_tol_rel * u0 if u0 > 0 else u_final == 0.0

    omega_T = records[-1].omega
    Io_T = inertia.apply(omega_T)

    if absA0 == 0.0:
        # no stored momentum: the only limit is rest
        return AxisVerdict(
            converged=bool(u_ok),
            axis_index=None,
            mu=0.0,
            final_angle_deg=float("nan"),
            mean_angle_deg=float("nan"),
            residual=float(np.mean([_rho(r.omega, inertia) for r in window])),
            inertia_mismatch=float(np.linalg.norm(Io_T)),
            degenerate_axes=None,
        )

    mean_angles = np.array([
        np.mean([_line_angle_deg(r.omega, inertia.axes[:, j]) for r in window])
        for j in range(3)
    ])
    j_best = int(np.nanargmin(mean_angles))
    group = inertia.principal.degenerate_group(j_best)

    if len(group) > 1:
        basis = inertia.axes[:, list(group)]
        mean_angle = float(np.mean([_subspace_angle_deg(r.omega, basis)
                                    for r in window]))
        final_angle = _subspace_angle_deg(omega_T, basis)
        axis_index = None
        degenerate_axes = tuple(j + 1 for j in group)
        mu = absA0 / float(inertia.lams[j_best])
    else:
        direction = inertia.axes[:, j_best]
        mean_angle = float(mean_angles[j_best])
        final_angle = _line_angle_deg(omega_T, direction)
        axis_index = j_best + 1
        degenerate_axes = None
        sign = 1.0 if float(np.dot(omega_T, direction)) >= 0 else -1.0
        mu = sign * absA0 / float(inertia.lams[j_best])

    mean_rho = float(np.mean([_rho(r.omega, inertia) for r in window]))
    final_rho = _rho(omega_T, inertia)
    mismatch = abs(float(np.linalg.norm(Io_T)) - absA0) / absA0

    angle_ok = (mean_angle <= tol.angle_tol_deg
                and final_angle <= tol.angle_tol_deg)
    rho_ok = mean_rho <= tol.res_tol and final_rho <= tol.res_tol
    return AxisVerdict(
        converged=bool(angle_ok and rho_ok and u_ok),
        axis_index=axis_index,
        mu=mu,
        final_angle_deg=final_angle,
        mean_angle_deg=mean_angle,
        residual=mean_rho,
        inertia_mismatch=mismatch,
        degenerate_axes=degenerate_axes,
    )


@dataclass(frozen=True)
class PredictionReport:
    """Outcome of the initial-data inequalities, by spectrum shape."""

    case: str      # sphere | egg | general
    verdict: str   # largest_axis_guaranteed | smallest_axis_excluded | inconclusive
    predicted_mu: float | None
    inequalities: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "verdict": self.verdict,
            "predicted_mu": self.predicted_mu,
            "inequalities": dict(self.inequalities),
        }


def predict_axis(lambdas, omega_bar0, e_tilde0: float,
                 absA0: float | None = None,
                 degeneracy_rtol: float = 1e-9) -> PredictionReport:
    """Evaluate the a-priori axis criteria in the principal frame.

    lambdas must be ascending.  Fully degenerate spectra rotate rigidly and
    trivially keep the (arbitrary) axis; for the oblate-degenerate spectrum
    (l1 = l2 < l3) the long-axis guarantee holds when the relative energy
    is below l3 (l3/l1 - 1) w3^2; fully split spectra use the two
    energy/momentum inequalities, the weaker of which still rules out the
    smallest axis.  A spectrum degenerate at the top (l1 < l2 = l3) is
    evaluated with the general-case arithmetic, which stays a valid bound.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.shape != (3,):
        raise ValueError("lambdas must be three values")
    if not (lam[0] <= lam[1] <= lam[2]):
        raise ValueError("lambdas must be sorted ascending")
    if lam[0] <= 0:
        raise ValueError("lambdas must be positive")
    w = np.asarray(omega_bar0, dtype=float)
    if e_tilde0 < 0:
        raise ValueError("e_tilde0 must be nonnegative")
    if absA0 is None:
        absA0 = float(np.linalg.norm(lam * w))

    tol = degeneracy_rtol * lam[2]
    low_pair = lam[1] - lam[0] <= tol
    high_pair = lam[2] - lam[1] <= tol

    if low_pair and high_pair:
        return PredictionReport(
            case="sphere",
            verdict=VERDICT_LARGEST,
            predicted_mu=absA0 / lam[2],
            inequalities={"note": "isotropic inertia: rigid velocity is constant"},
        )

    if low_pair:
        l_s, l_l = lam[0], lam[2]
        threshold = l_l * (l_l / l_s - 1.0) * w[2] ** 2
        guaranteed = e_tilde0 < threshold
        return PredictionReport(
            case="egg",
            verdict=VERDICT_LARGEST if guaranteed else VERDICT_OPEN,
            predicted_mu=absA0 / l_l if guaranteed else None,
            inequalities={"egg_lhs": float(e_tilde0),
                          "egg_rhs": float(threshold)},
        )

    l_s, l_m, l_l = lam
    top_lhs = l_l * (l_l / l_m - 1.0) * w[2] ** 2
    top_rhs = e_tilde0 + l_s * (1.0 - l_s / l_m) * w[0] ** 2
    gen_lhs = (l_m * (l_m / l_s - 1.0) * w[1] ** 2
               + l_l * (l_l / l_s - 1.0) * w[2] ** 2)
    gen_rhs = float(e_tilde0)
    inequalities = {
        "largest_lhs": float(top_lhs), "largest_rhs": float(top_rhs),
        "instability_lhs": float(gen_lhs), "instability_rhs": gen_rhs,
    }
    if top_lhs > top_rhs and gen_lhs > gen_rhs:
        return PredictionReport(case="general", verdict=VERDICT_LARGEST,
                                predicted_mu=absA0 / l_l,
                                inequalities=inequalities)
    if gen_lhs > gen_rhs:
        return PredictionReport(case="general", verdict=VERDICT_NO_SMALLEST,
                                predicted_mu=None, inequalities=inequalities)
    return PredictionReport(case="general", verdict=VERDICT_OPEN,
                            predicted_mu=None, inequalities=inequalities)


def predict_from_inertia(inertia: InertiaOps, omega_bar0_body,
                         e_tilde0: float) -> PredictionReport:
    """Rotate body-frame initial data into the principal frame and predict."""
    w_body = np.asarray(omega_bar0_body, dtype=float)
    w_pf = inertia.axes.T @ w_body
    absA0 = float(np.linalg.norm(inertia.apply(w_body)))
    return predict_axis(inertia.lams, w_pf, e_tilde0, absA0=absA0)


def scaling_transform(config: RunConfig, lam: float) -> RunConfig:
    """Rescale a run config along the system's similarity transform.

    Lengths shrink by 1/lam at fixed grid resolution, pointwise velocity
    scales grow by lam, the rigid velocity by lam^2, and all times shrink
    by 1/lam^2; viscosity and density are untouched.  Trajectories map as
    omega_bar_scaled(s) = lam^2 omega_bar_original(lam^2 s), which is the
    comparison to apply between the paired runs' samples.
    """
    if not (lam > 0):
        raise ConfigError("scaling factor must be positive")
    geo = config.geometry
    new_geo = type(geo)(
        outer_half_extents=tuple(np.asarray(geo.outer) / lam),
        cavity_half_extents=tuple(np.asarray(geo.cavity) / lam),
        cavity_offset=tuple(np.asarray(geo.offset) / lam),
        rho_B=geo.rho_B,
        nu=geo.nu,
    )
    init = config.init
    if init.kind != "zero":
        init = type(init)(kind=init.kind, seed=init.seed,
                          amplitude=init.amplitude * lam, axis=init.axis)

    if config.omega_bar0 is not None:
        omega_bar0 = tuple(np.asarray(config.omega_bar0) * lam ** 2)
        A0 = None
    else:
        # convert through the rigid velocity, which carries the scaling law
        from .geometry import compute_mass_properties
        ops_old = InertiaOps(compute_mass_properties(geo).I)
        ops_new = InertiaOps(compute_mass_properties(new_geo).I)
        w_old = ops_old.solve(np.asarray(config.A0))
        A0 = tuple(ops_new.apply(w_old * lam ** 2))
        omega_bar0 = None

    label = config.label
    if lam != 1.0:
        label = f"{label}-scaled-{lam:g}" if label else f"scaled-{lam:g}"

    return config.with_updates(
        geometry=new_geo,
        init=init,
        omega_bar0=omega_bar0,
        A0=A0,
        L0=tuple(np.asarray(config.L0) / lam ** 2),
        dt=None if config.dt is None else config.dt / lam ** 2,
        t_end=config.t_end / lam ** 2,
        sample_interval=config.sample_interval / lam ** 2,
        label=label,
    )
