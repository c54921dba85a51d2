"""Command-line interface: configuration ingestion, seeded runs, result emission.

Commands:
    check         evaluate the solvability condition, print the report as JSON
    simulate      run seeded paths; write paths.csv and summary.json
    ml-eval       print a Mittag-Leffler value
    heat-example  emit the shipped example configuration

Outputs are deterministic for a fixed config and seed; numbers are written
with 17 significant digits so every double round-trips exactly. Errors go
to stderr as JSON with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import LoadedConfig, default_heat_config_text, load_config
from .dynamics import TimeGrid, branch_continuity_check, classify_time, picard_solve
from .errors import FracstochError, MaxIterations
from .existence import check_existence
from .heat_example import build_spec, suggested_constants
from .mlf import MlParams, ml_eval
from .noise import sample_noise


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _emit_error(exc: Exception) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, MaxIterations):
        payload["iter_history"] = [float(d) for d in exc.iter_history]
    json.dump(payload, sys.stderr)
    sys.stderr.write("\n")


def _existence_payload(loaded: LoadedConfig):
    constants = loaded.constants
    if constants is None and loaded.problem is not None:
        constants = suggested_constants(loaded.problem)
    if constants is None:
        return None
    return check_existence(constants)


def cmd_check(args) -> int:
    loaded = load_config(args.config)
    report = _existence_payload(loaded)
    if report is None:
        raise FracstochError("nothing to check: no constants and no problem section")
    json.dump(report.as_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0 if report.satisfied else 1


def cmd_simulate(args) -> int:
    loaded = load_config(args.config)
    if loaded.problem is None:
        raise FracstochError("simulate requires 'problem = heat_example' in the config")
    run = loaded.run
    if args.seed is not None:
        run.seed = args.seed
    if args.n_paths is not None:
        run.n_paths = args.n_paths
    if args.dt is not None:
        run.dt = args.dt
    if args.out is not None:
        run.out_dir = args.out
    if args.format is not None:
        kinds = {k.strip() for k in args.format.split(",")}
        unknown = kinds - {"csv", "json"}
        if unknown:
            raise FracstochError(f"unknown output format(s): {sorted(unknown)}")
        run.paths_csv = "csv" in kinds
        run.summary_json = "json" in kinds

    problem = replace(loaded.problem, rng_seed=run.seed)
    spec = build_spec(problem)
    grid = TimeGrid.uniform(problem.horizon, run.dt, spec.schedule)
    nodes = grid.nodes
    out_dir = Path(run.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    n_modes = spec.operator.n_modes
    labels = [classify_time(spec.schedule, float(t)).label for t in nodes]
    mean_sq = np.zeros(nodes.size)
    m2_sq = np.zeros(nodes.size)
    sweep_counts = []
    jump_counts = []
    max_gap = 0.0

    csv_lines = []
    header = ["path_id", "t", "branch"] + [f"c_{n}" for n in range(n_modes)] + ["norm"]
    csv_lines.append(",".join(header))

    for p in range(run.n_paths):
        cfg = replace(spec.noise, rng_seed=run.seed, stream_id=p)
        path_spec = replace(spec, noise=cfg)
        noise_real = sample_noise(grid, cfg)
        res = picard_solve(path_spec, grid, noise_real, tol=run.picard_tol,
                           max_iter=run.max_sweeps)
        vals = res.path.values_at(nodes)
        sq = np.sum(vals * vals, axis=1)
        delta = sq - mean_sq
        mean_sq += delta / (p + 1)
        m2_sq += delta * (sq - mean_sq)
        sweep_counts.append(res.sweeps)
        jump_counts.append(len(noise_real.events))
        for s_i, gap in branch_continuity_check(res.path, path_spec, grid, noise_real):
            max_gap = max(max_gap, gap)
        if run.paths_csv:
            for j, t in enumerate(nodes):
                row = [str(p), _fmt(t), labels[j]]
                row += [_fmt(v) for v in vals[j]]
                row.append(_fmt(float(np.linalg.norm(vals[j]))))
                csv_lines.append(",".join(row))

    if run.paths_csv:
        (out_dir / "paths.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8", newline="\n")

    if run.summary_json:
        report = _existence_payload(loaded)
        summary = {
            "version": __version__,
            "seed": run.seed,
            "n_paths": run.n_paths,
            "grid": {
                "dt": float(grid.dt),
                "horizon": float(grid.horizon),
                "n_nodes": int(nodes.size),
            },
            "nodes": [float(t) for t in nodes],
            "mean_sq_norm": [float(x) for x in mean_sq],
            "var_sq_norm": [float(x) for x in m2_sq / run.n_paths],
            "picard_sweeps": sweep_counts,
            "jump_counts": jump_counts,
            "branch_continuity_max_gap": float(max_gap),
            "existence": report.as_dict() if report is not None else None,
        }
        with open(out_dir / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    return 0


def cmd_ml_eval(args) -> int:
    value = ml_eval(MlParams(args.alpha, args.beta), args.z)
    sys.stdout.write(_fmt(value) + "\n")
    return 0


def cmd_heat_example(args) -> int:
    text = default_heat_config_text()
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracstoch",
        description="Simulate fractional stochastic evolution with impulses and "
        "delay, and check the solvability condition.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="evaluate max(Delta_1, Delta_2) < 1")
    p_check.add_argument("--config", required=True)
    p_check.set_defaults(func=cmd_check)

    p_sim = sub.add_parser("simulate", help="run seeded paths, write CSV/JSON")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--n-paths", type=int, default=None)
    p_sim.add_argument("--dt", type=float, default=None)
    p_sim.add_argument("--out", default=None)
    p_sim.add_argument("--format", default=None, help="comma list: csv,json")
    p_sim.set_defaults(func=cmd_simulate)

    p_ml = sub.add_parser("ml-eval", help="print E_{alpha,beta}(z)")
    p_ml.add_argument("alpha", type=float)
    p_ml.add_argument("beta", type=float)
    p_ml.add_argument("z", type=float)
    p_ml.set_defaults(func=cmd_ml_eval)

    p_heat = sub.add_parser("heat-example", help="emit the shipped example config")
    p_heat.add_argument("--out", default=None)
    p_heat.set_defaults(func=cmd_heat_example)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FracstochError as exc:
        _emit_error(exc)
        return 2
    except OverflowError as exc:
        _emit_error(exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
