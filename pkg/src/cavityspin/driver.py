"""The batch run loop: configuration in, CSV/JSON artifacts out."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .asymptotics import (
    AxisVerdict,
    ClassifyTolerances,
    PredictionReport,
    classify_limit,
    predict_from_inertia,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig
from .coupling import (
    CoupledState,
    InertiaOps,
    RigidState,
    coupled_step,
    make_coupled_state,
)
from .diagnostics import (
    BudgetReport,
    ConservationReport,
    RunRefs,
    conservation_report,
    energy_budget,
    make_record,
    write_csv,
)
from .fluid import (
    FluidParams,
    SimulationError,
    dissipation_rate,
    initialize_velocity,
    make_grid,
    stable_dt,
)
from .geometry import compute_mass_properties

__all__ = ["RunSetup", "RunResult", "prepare_run", "simulate", "write_summary"]


@dataclass
class RunSetup:
    config: RunConfig
    inertia_data: object
    inertia: InertiaOps
    grid: object
    params: FluidParams
    state0: CoupledState
    dt: float
    n_steps: int
    sample_every: int


@dataclass
class RunResult:
    config: RunConfig
    records: list
    state: CoupledState
    verdict: AxisVerdict
    prediction: PredictionReport
    conservation: ConservationReport
    budget: BudgetReport
    summary: dict
    csv_path: Path | None = None
    summary_path: Path | None = None


def prepare_run(config: RunConfig, threads: int = 1) -> RunSetup:
    """Build the initial coupled state and resolve the step size."""
    inertia_data = compute_mass_properties(config.geometry)
    inertia = InertiaOps(inertia_data.I,
                         degeneracy_rtol=config.tolerances.degeneracy_rtol)
    grid = make_grid(config.geometry, inertia_data, config.resolution)
    params = FluidParams(nu=config.geometry.nu, dt_safety=config.dt_safety,
                         threads=threads)
    fluid0 = initialize_velocity(grid, config.init,
                                 cg_tol=config.tolerances.cg_tol)

    if config.omega_bar0 is not None:
        A0 = inertia.apply(np.asarray(config.omega_bar0))
    else:
        A0 = np.asarray(config.A0, dtype=float)
    rigid0 = RigidState(A=A0, L=np.asarray(config.L0, dtype=float), Q=np.eye(3))
    state0 = make_coupled_state(0.0, fluid0, rigid0, inertia)

    if config.dt is not None:
        dt = config.dt
    else:
        dt, _ = stable_dt(fluid0, params)
        dt = min(dt, config.sample_interval)
    if config.sample_interval < dt:
        raise ConfigError("time.sample_interval must be at least the step size")
    sample_every = max(1, int(round(config.sample_interval / dt)))
    n_blocks = max(1, int(round(config.t_end / (dt * sample_every))))
    n_steps = sample_every * n_blocks
    return RunSetup(config=config, inertia_data=inertia_data, inertia=inertia,
                    grid=grid, params=params, state0=state0, dt=dt,
                    n_steps=n_steps, sample_every=sample_every)


def _inertia_summary(data) -> dict:
    return {
        "m_B": data.m_B,
        "m_F": data.m_F,
        "m": data.m,
        "y_F": list(map(float, data.y_F)),
        "y_c": list(map(float, data.y_c)),
        "I": [list(map(float, row)) for row in data.I],
        "I_B": [list(map(float, row)) for row in data.I_B],
        "I_F": [list(map(float, row)) for row in data.I_F],
    }


def write_summary(path: Path, summary: dict) -> None:
    path.write_text(json.dumps(summary, indent=2, sort_keys=True,
                               allow_nan=True, default=float))


def simulate(config: RunConfig, out_dir=None, checkpoint_every: int | None = None,
             resume=None, threads: int = 1, progress=None) -> RunResult:
    """Run the coupled loop and assemble every artifact the CLI emits.

    On a numerical failure a partial summary (with the error and a state
    snapshot) is still written before the exception propagates.
    """
    t_wall = time.perf_counter()
    setup = prepare_run(config, threads=threads)
    inertia = setup.inertia
    tol = config.tolerances
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    state = setup.state0
    diss_cum = 0.0
    prev_diss = 0.0 if config.dry_run else dissipation_rate(
        state.fluid, config.geometry.nu)
    start_step = 0
    records = []
    omega_prev = None  # previous step's omega, seeds the closure iteration

    if resume is not None:
        state, diag = load_checkpoint(resume, setup.grid, inertia,
                                      config_sha256=config.sha256())
        diss_cum = float(diag["diss_cum"])
        prev_diss = float(diag["prev_diss"])
        start_step = state.step_index
        if diag.get("omega_prev") is not None:
            omega_prev = np.asarray(diag["omega_prev"], dtype=float)
        refs = RunRefs(absA0=float(diag["absA0"]),
                       A0_inertial=np.asarray(diag["A0_inertial"], dtype=float),
                       absL0=float(diag["absL0"]))
    else:
        refs = RunRefs(absA0=float(np.linalg.norm(state.rigid.A)),
                       A0_inertial=state.rigid.Q @ state.rigid.A,
                       absL0=float(np.linalg.norm(state.rigid.L)))
        records.append(make_record(state, inertia, refs, prev_diss, diss_cum,
                                   picard_iters=0))

    def diag_dict():
        return {
            "diss_cum": diss_cum,
            "prev_diss": prev_diss,
            "absA0": refs.absA0,
            "A0_inertial": list(map(float, refs.A0_inertial)),
            "absL0": refs.absL0,
            "dt": setup.dt,
            "sample_every": setup.sample_every,
            "omega_prev": (None if omega_prev is None
                           else list(map(float, omega_prev))),
        }

    error = None
    try:
        for k in range(start_step + 1, setup.n_steps + 1):
            guess0 = None
            if omega_prev is not None:
                guess0 = 2.0 * state.omega - omega_prev
            omega_prev = state.omega
            state, report = coupled_step(
                state, setup.dt, inertia, setup.params,
                picard_tol=tol.picard_tol, max_picard=tol.max_picard,
                dry_run=config.dry_run, cg_tol=tol.cg_tol, guess0=guess0)
            diss = report.fluid.dissipation if report.fluid is not None else 0.0
            diss_cum += 0.5 * (prev_diss + diss) * setup.dt
            prev_diss = diss
            if k % setup.sample_every == 0:
                records.append(make_record(state, inertia, refs, diss,
                                           diss_cum, report.picard_iterations))
            if (checkpoint_every and out is not None
                    and k % checkpoint_every == 0):
                save_checkpoint(out / f"ckpt_{k:08d}", state, config.sha256(),
                                diag_dict())
            if progress is not None and k % max(1, setup.n_steps // 20) == 0:
                progress(k, setup.n_steps, state)
    except SimulationError as err:
        error = err
        if out is not None:
            snap = save_checkpoint(out / f"ckpt_failed_{state.step_index:08d}",
                                   state, config.sha256(), diag_dict())
            summary = {
                "label": config.label,
                "config_sha256": config.sha256(),
                "error": f"{type(err).__name__}: {err}",
                "failed_at_step": state.step_index,
                "t": state.t,
                "snapshot": str(snap[0]),
            }
            write_summary(out / "summary.json", summary)
        raise

    if not records:
        raise ConfigError("resume point is already at the end of the run")
    verdict = classify_limit(records, inertia, ClassifyTolerances(
        angle_tol_deg=tol.angle_tol_deg, res_tol=tol.res_tol,
        u_tol_rel=tol.u_tol_rel))
    omega_bar0 = inertia.solve(refs.A0_inertial)
    prediction = predict_from_inertia(inertia, omega_bar0,
                                      e_tilde0=max(records[0].E_tilde, 0.0))
    conservation = conservation_report(records)
    budget = energy_budget(records, steps_per_record=setup.sample_every,
                           step_slack_rel=tol.budget_slack_rel)
    wall = time.perf_counter() - t_wall

    summary = {
        "label": config.label,
        "config": config.to_dict(),
        "config_sha256": config.sha256(),
        "error": None,
        "grid": {"n": list(setup.grid.n), "h": list(setup.grid.h),
                 "corner": list(setup.grid.corner)},
        "inertia": _inertia_summary(setup.inertia_data),
        "lambdas": list(map(float, inertia.lams)),
        "dt": setup.dt,
        "n_steps": setup.n_steps,
        "sample_every": setup.sample_every,
        "t_end_effective": setup.n_steps * setup.dt,
        "energy_initial": records[0].E,
        "energy_final": records[-1].E,
        "u_norm_initial": float(np.sqrt(max(records[0].u_l2sq, 0.0))),
        "u_norm_final": float(np.sqrt(max(records[-1].u_l2sq, 0.0))),
        "prediction": prediction.to_dict(),
        "verdict": verdict.to_dict(),
        "conservation": conservation.to_dict(),
        "budget": budget.to_dict(),
        "wall_time_s": wall,
    }

    csv_path = summary_path = None
    if out is not None:
        csv_path = out / "series.csv"
        write_csv(csv_path, records)
        summary_path = out / "summary.json"
        write_summary(summary_path, summary)

    return RunResult(config=config, records=records, state=state,
                     verdict=verdict, prediction=prediction,
                     conservation=conservation, budget=budget, summary=summary,
                     csv_path=csv_path, summary_path=summary_path)
