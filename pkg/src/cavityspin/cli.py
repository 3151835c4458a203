"""Command-line front end.

Verbs: inspect, run, predict, verify, scale, report.  Exit codes: 0 ok,
2 config error, 3 numerical failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .asymptotics import predict_from_inertia, scaling_transform
from .config import ConfigError, load_config
from .coupling import InertiaOps, omega_from_state
from .driver import simulate, write_summary
from .fluid import SimulationError, fluid_angular_momentum, fluid_kinetic_energy, initialize_velocity, make_grid
from .geometry import GeometryError, compute_mass_properties
from .reference import write_reference_configs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4


def _realized_initial(config):
    """Inertia, realized initial field functionals and the prediction."""
    data = compute_mass_properties(config.geometry)
    inertia = InertiaOps(data.I,
                         degeneracy_rtol=config.tolerances.degeneracy_rtol)
    grid = make_grid(config.geometry, data, config.resolution)
    fluid = initialize_velocity(grid, config.init,
                                cg_tol=config.tolerances.cg_tol)
    m_f = fluid_angular_momentum(fluid)
    u2 = fluid_kinetic_energy(fluid)
    if config.omega_bar0 is not None:
        A0 = inertia.apply(np.asarray(config.omega_bar0))
    else:
        A0 = np.asarray(config.A0, dtype=float)
    omega_bar0 = inertia.solve(A0)
    _, omega_tilde0, _ = omega_from_state(A0, m_f, inertia)
    e_tilde0 = u2 - float(omega_tilde0 @ inertia.apply(omega_tilde0))
    prediction = predict_from_inertia(inertia, omega_bar0, max(e_tilde0, 0.0))
    return data, inertia, prediction, {
        "u_l2sq": u2,
        "e_tilde0": e_tilde0,
        "m_f0": list(map(float, m_f)),
        "absA0": float(np.linalg.norm(A0)),
        "omega_bar0": list(map(float, omega_bar0)),
    }


def _print_inertia(data, inertia):
    print(f"m_B = {data.m_B:.6g}   m_F = {data.m_F:.6g}   m = {data.m:.6g}")
    print(f"y_F = {np.array2string(data.y_F, precision=6)}   "
          f"y_c = {np.array2string(data.y_c, precision=6)}")
    with np.printoptions(precision=6, suppress=True):
        print("I  =\n", data.I)
    lam = inertia.lams
    print(f"principal moments: {lam[0]:.6g} <= {lam[1]:.6g} <= {lam[2]:.6g}")
    for j in range(3):
        print(f"  axis {j + 1}: {np.array2string(inertia.axes[:, j], precision=6)}")
    if inertia.principal.degenerate_pairs:
        pairs = [f"({i + 1},{j + 1})" for i, j in inertia.principal.degenerate_pairs]
        print("degenerate pairs:", " ".join(pairs))


def cmd_inspect(args) -> int:
    config = load_config(args.config)
    data, inertia, prediction, initial = _realized_initial(config)
    print(f"config: {config.label or args.config}")
    _print_inertia(data, inertia)
    print(f"initial |u|^2 = {initial['u_l2sq']:.6g}, "
          f"relative energy = {initial['e_tilde0']:.6g}")
    print(f"prediction [{prediction.case}]: {prediction.verdict}")
    for key, value in prediction.inequalities.items():
        print(f"  {key} = {value}")
    if prediction.predicted_mu is not None:
        print(f"  predicted terminal spin magnitude: {prediction.predicted_mu:.6g}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_summary(out / "inspect.json", {
            "config": config.to_dict(),
            "config_sha256": config.sha256(),
            "inertia": {
                "m_B": data.m_B, "m_F": data.m_F, "m": data.m,
                "y_F": list(map(float, data.y_F)),
                "y_c": list(map(float, data.y_c)),
                "I": [list(map(float, row)) for row in data.I],
                "lambdas": list(map(float, inertia.lams)),
                "axes": [list(map(float, inertia.axes[:, j])) for j in range(3)],
            },
            "initial": initial,
            "prediction": prediction.to_dict(),
        })
        print(f"wrote {out / 'inspect.json'}")
    return EXIT_OK


def cmd_predict(args) -> int:
    config = load_config(args.config)
    _, _, prediction, initial = _realized_initial(config)
    payload = {"config_sha256": config.sha256(),
               "initial": initial,
               "prediction": prediction.to_dict()}
    print(json.dumps(payload, indent=2, default=float))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_summary(out / "prediction.json", payload)
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args.config)
    out_dir = args.out or "."
    try:
        result = simulate(config, out_dir=out_dir,
                          checkpoint_every=args.checkpoint_every,
                          resume=args.resume, threads=args.threads)
    except SimulationError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    v = result.verdict
    print(f"run {config.label or args.config}: {result.summary['n_steps']} steps, "
          f"dt = {result.summary['dt']:.3e}, wall {result.summary['wall_time_s']:.1f} s")
    axis = v.axis_index if v.axis_index is not None else "degenerate space"
    print(f"verdict: converged={v.converged} axis={axis} "
          f"final angle {v.final_angle_deg:.3f} deg, residual {v.residual:.2e}")
    print(f"prediction [{result.prediction.case}]: {result.prediction.verdict}")
    print(f"budget: max residual {result.budget.max_residual:.3e}, "
          f"monotonicity violations {result.budget.monotonicity_violations}")
    print(f"artifacts: {result.csv_path} {result.summary_path}")
    if args.plots:
        from .plots import render_figures
        written = render_figures(result.csv_path, stem=config.label)
        print("figures:", " ".join(str(p) for p in written))
    return EXIT_OK


def cmd_scale(args) -> int:
    config = load_config(args.config)
    scaled = scaling_transform(config, args.factor)
    text = json.dumps(scaled.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    lam = args.factor
    print(f"# compare: omega_bar_scaled(s) ~ {lam}^2 * omega_bar_original({lam}^2 s)",
          file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    from .plots import render_figures
    if args.csv:
        csv_path = Path(args.csv)
    else:
        csv_path = Path(args.run) / "series.csv"
    if not csv_path.exists():
        print(f"no time series found at {csv_path}", file=sys.stderr)
        return EXIT_CONFIG
    written = render_figures(csv_path, out_dir=args.out, stem=args.stem)
    for path in written:
        print(path)
    return EXIT_OK


def _tests_dir() -> Path | None:
    here = Path(__file__).resolve()
    for base in (here.parents[2], Path.cwd()):
        cand = base / "tests"
        if (cand / "test_acceptance.py").exists():
            return cand
    return None


def cmd_verify(args) -> int:
    import subprocess

    tests = _tests_dir()
    if tests is None:
        print("verification suite not found (run from a source checkout)",
              file=sys.stderr)
        return EXIT_CONFIG
    cmd = [sys.executable, "-m", "pytest", str(tests), "-q"]
    if args.level == "fast":
        cmd += ["-m", "not acceptance"]
    print("running:", " ".join(cmd))
    proc = subprocess.run(cmd)
    if proc.returncode == 0:
        print(f"verification ({args.level}) passed")
        return EXIT_OK
    print(f"verification ({args.level}) FAILED", file=sys.stderr)
    return EXIT_VERIFY


def cmd_write_configs(args) -> int:
    paths = write_reference_configs(args.out)
    for p in paths:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavityspin",
        description="Coupled simulation of a spinning rigid brick with a "
                    "viscous-fluid-filled cavity")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="mass properties, axes and prediction")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("run", help="run a simulation from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="artifact directory (default .)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--checkpoint-every", type=int, default=None)
    p.add_argument("--resume", default=None, help="checkpoint path to resume")
    p.add_argument("--plots", action="store_true",
                   help="render report figures next to the CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("predict", help="a-priori axis prediction only")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("verify", help="run the verification suites")
    p.add_argument("--level", choices=("fast", "full"), default="fast")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scale", help="emit the similarity-scaled config")
    p.add_argument("--config", required=True)
    p.add_argument("--factor", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("report", help="render figures for a finished run")
    p.add_argument("--run", default=".", help="run directory with series.csv")
    p.add_argument("--csv", default=None, help="explicit CSV path")
    p.add_argument("--out", default=None)
    p.add_argument("--stem", default="", help="filename prefix for figures")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("write-configs", help="write the reference configs")
    p.add_argument("--out", default="configs")
    p.set_defaults(func=cmd_write_configs)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GeometryError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
