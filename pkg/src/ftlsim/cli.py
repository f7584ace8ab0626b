"""Command-line front end: simulate, convergence sweeps, reference comparison.

Outputs are plain CSV/JSON with 17-significant-digit floats so reruns of the
same config reproduce every file byte for byte; the exit code is nonzero when
a requested invariant check fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, run_scenario, validate_dict
from .diagnostics import ConvergenceTable
from .presets import PRESETS, get_preset, preset_names


def _fmt(x) -> str:
    return format(float(x), ".17g")


def load_scenario(spec: str) -> dict:
    """Preset name or path to a JSON config file."""
    if spec in PRESETS:
        return get_preset(spec)
    path = Path(spec)
    if not path.exists():
        raise SystemExit(f"scenario {spec!r} is neither a preset nor a file; "
                         f"presets: {', '.join(preset_names())}")
    return json.loads(path.read_text())


def apply_overrides(raw: dict, args) -> dict:
    if getattr(args, "particles", None):
        raw["n"] = args.particles
    if getattr(args, "windows", None):
        raw["m"] = args.windows
    if getattr(args, "t_final", None):
        raw["t_final"] = args.t_final
    if getattr(args, "tol", None):
        raw["rel_tol"] = args.tol
    return raw


def _density_rows(t: float, density) -> list[tuple]:
    rows = []
    for i in range(len(density.values)):
        rows.append((t, density.breakpoints[i], density.breakpoints[i + 1],
                     density.values[i]))
    return rows


def _snapshot_density(result, k: int):
    traj = result.trajectory
    if result.config.model == "lwr_ibvp":
        return traj.interior_density_at(k)
    return traj.density_at(k)


def write_outputs(result, out_dir: Path, fmt: str = "csv") -> dict:
    """Write snapshots, particle tracks, and the diagnostics report; return summary."""
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = result.trajectory
    times = traj.times
    wanted = result.config.snapshots_at or [float(times[-1])]
    snap_rows = []
    for t in wanted:
        k = int(np.argmin(np.abs(times - t)))
        snap_rows.extend(_density_rows(float(times[k]), _snapshot_density(result, k)))
    if fmt == "csv":
        with open(out_dir / "snapshots.csv", "w") as fh:
            fh.write("t,x_left,x_right,rho\n")
            for row in snap_rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
        with open(out_dir / "particles.csv", "w") as fh:
            fh.write("t,particle_index,x\n")
            for k, t in enumerate(times):
                for j, x in enumerate(traj.positions[k]):
                    fh.write(f"{_fmt(t)},{j},{_fmt(x)}\n")
    else:
        payload = {
            "snapshots": [{"t": r[0], "x_left": r[1], "x_right": r[2], "rho": r[3]}
                          for r in snap_rows],
            "particles": {
                "times": [float(t) for t in times],
                "positions": [[float(x) for x in row] for row in traj.positions],
            },
        }
        (out_dir / "simulation.json").write_text(
            json.dumps(payload, sort_keys=True) + "\n")

    diagnostics = {
        "invariants": result.report.to_dict(),
        "extras": result.extras,
    }
    if result.reference_error is not None:
        diagnostics["reference_l1_error"] = result.reference_error
    (out_dir / "diagnostics.json").write_text(
        json.dumps(diagnostics, sort_keys=True, default=float) + "\n")

    summary = {
        "name": result.config.name,
        "config": result.config.to_dict(),
        "invariants_passed": result.passed,
        "reference_l1_error": result.reference_error,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, default=float) + "\n")
    return summary


def cmd_simulate(args) -> int:
    raw = apply_overrides(load_scenario(args.scenario), args)
    try:
        config = ScenarioConfig.from_dict(raw)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    result = run_scenario(config)
    out_dir = Path(args.out_dir) / config.name
    summary = write_outputs(result, out_dir, args.format)
    print(json.dumps(summary, sort_keys=True, default=float))
    if args.check_invariants == "on" and not result.passed:
        return 1
    return 0


def cmd_validate(args) -> int:
    raw = apply_overrides(load_scenario(args.scenario), args)
    errors = validate_dict(raw)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    print(f"{raw['name']}: valid")
    return 0


def cmd_list_presets(args) -> int:
    for name in preset_names():
        p = PRESETS[name]
        print(f"{name}: {p['model']} n={p['n']} t_final={p['t_final']}")
    return 0


def cmd_compare(args) -> int:
    raw = apply_overrides(load_scenario(args.scenario), args)
    if raw.get("reference", "none") == "none":
        print("scenario has no reference comparator", file=sys.stderr)
        return 2
    config = ScenarioConfig.from_dict(raw)
    result = run_scenario(config)
    out = {
        "name": config.name,
        "reference": config.reference,
        "l1_error": result.reference_error,
    }
    out_dir = Path(args.out_dir) / config.name
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "compare.json").write_text(json.dumps(out, sort_keys=True) + "\n")
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_convergence(args) -> int:
    raw = load_scenario(args.scenario)
    if raw.get("reference", "none") == "none":
        print("scenario has no reference comparator", file=sys.stderr)
        return 2
    n_list = [int(s) for s in args.particles.split(",")]
    m_list = [int(s) for s in args.windows.split(",")] if args.windows else None
    if m_list is not None and len(m_list) != len(n_list):
        print("--windows must list one window count per particle count", file=sys.stderr)
        return 2
    labels, errors = [], []
    for i, n in enumerate(n_list):
        run_raw = dict(raw)
        run_raw["n"] = n
        if m_list is not None:
            run_raw["m"] = m_list[i]
        if args.t_final:
            run_raw["t_final"] = args.t_final
        config = ScenarioConfig.from_dict(run_raw)
        result = run_scenario(config)
        labels.append(f"n={n}" + (f",m={m_list[i]}" if m_list else ""))
        errors.append(float(result.reference_error))
    table = ConvergenceTable(labels, errors)
    out_dir = Path(args.out_dir) / raw["name"]
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "convergence.csv", "w") as fh:
        fh.write("label,error,order\n")
        orders = [""] + [_fmt(o) for o in table.orders]
        for lab, err, order in zip(table.labels, table.errors, orders):
            fh.write(f"{lab},{_fmt(err)},{order}\n")
    print(json.dumps(table.to_dict(), sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftlsim",
        description="Deterministic particle approximations of macroscopic flow models")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True,
                       help="preset name or path to a JSON config")
        p.add_argument("--particles", type=int, help="override particle count n")
        p.add_argument("--windows", type=int, help="override window count m (IBVP)")
        p.add_argument("--t-final", dest="t_final", type=float, help="override T")
        p.add_argument("--tol", type=float, help="override relative tolerance")
        p.add_argument("--out-dir", default="out", help="output directory root")

    p_sim = sub.add_parser("simulate", help="run one scenario and write artifacts")
    common(p_sim)
    p_sim.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sim.add_argument("--check-invariants", choices=("on", "off"), default="on")
    p_sim.set_defaults(fn=cmd_simulate)

    p_val = sub.add_parser("validate", help="validate a scenario without running it")
    common(p_val)
    p_val.set_defaults(fn=cmd_validate)

    p_cmp = sub.add_parser("compare", help="run and compare against the reference")
    common(p_cmp)
    p_cmp.set_defaults(fn=cmd_compare)

    p_conv = sub.add_parser("convergence", help="error sweep over particle counts")
    p_conv.add_argument("--scenario", required=True)
    p_conv.add_argument("--particles", required=True,
                        help="comma-separated particle counts, e.g. 100,200,400")
    p_conv.add_argument("--windows", help="comma-separated window counts (IBVP)")
    p_conv.add_argument("--t-final", dest="t_final", type=float)
    p_conv.add_argument("--out-dir", default="out")
    p_conv.set_defaults(fn=cmd_convergence)

    p_list = sub.add_parser("list-presets", help="list built-in scenarios")
    p_list.set_defaults(fn=cmd_list_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
