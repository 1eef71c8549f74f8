#!/usr/bin/env python3
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import TypeAdapter, ValidationError

from .config_manager import ScenarioError, ScenarioManager
from .control.horizon import HorizonInputError
from .control.slp import SlpError
from .metrics import RunMetrics
from .models import DEFAULT_SWEEP, SweepPoint
from .piecewise import PwlError
from .plant.string_model import calibration_report
from .reporting.artifacts import (
    make_manifest,
    write_horizons_csv,
    write_kpis_json,
    write_nodes_csv,
    write_pareto_csv,
    write_pareto_json,
    write_radar_csv,
    write_trace_csv,
)
from .reporting.kpi import compute_kpis
from .reporting.pareto import pareto_sweep, radar_table
from .sim.cosim import CosimError, run_cosim
from .sim.ems import DemandError
from .solver.lexicographic import LexicographicError

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_INPUT = 3
EXIT_CALIBRATION = 4

DEFAULT_OUTPUT_DIR = "bsplit-out"
OUTPUT_DIR_ENV = "BSPLIT_OUTPUT_DIR"

logger = logging.getLogger(__name__)


def _say(message: str) -> None:
    print(f"[bsplit] {message}")


def _parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="bsplit",
        description="Multi-string BESS power-split MPC: simulate, sweep weights, calibrate",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="Scenario JSON (default: built-in reference)")
    common.add_argument(
        "--out",
        type=Path,
        default=None,
        help=f"Output directory (default: ${OUTPUT_DIR_ENV} or ./{DEFAULT_OUTPUT_DIR})",
    )
    common.add_argument(
        "--log-level",
        default="warning",
        choices=["critical", "error", "warning", "info", "debug"],
        help="Python logging level (default: warning)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="Run one closed-loop co-simulation")
    simulate.add_argument("--demand", type=Path, default=None, help="Demand CSV (step, kW; + = charge)")
    simulate.add_argument("--horizon", type=int, default=None, help="Override horizon length T")
    simulate.add_argument("--apply-steps", type=int, default=None, help="Steps applied per horizon")
    simulate.add_argument("--seed", type=int, default=None, help="Seed for synthetic price jitter")
    simulate.add_argument(
        "--verbose-solver", action="store_true", help="Keep branch-and-bound node logs (nodes.csv)"
    )

    pareto = sub.add_parser("pareto", parents=[common], help="Sweep the inverter/battery loss weights")
    pareto.add_argument(
        "--sweep", type=Path, default=None, help="JSON list of {label, w3, w4} (default: S1-S3)"
    )
    pareto.add_argument("--demand", type=Path, default=None, help="Demand CSV shared by all points")
    pareto.add_argument("--workers", type=int, default=1, help="Concurrent sweep points (default: 1)")
    pareto.add_argument("--seed", type=int, default=None, help="Seed for synthetic price jitter")

    sub.add_parser("calibrate", parents=[common], help="Check thermal sensitivity and model residuals")
    return parser.parse_args(argv)


def _output_dir(args: argparse.Namespace) -> Path:
    out = args.out or Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScenarioError(out, f"cannot create output directory: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ScenarioError(out, "output directory is not writable")
    return out


def _load(args: argparse.Namespace) -> ScenarioManager:
    manager = ScenarioManager(args.config)
    manager.load()
    return manager


def cmd_simulate(args: argparse.Namespace) -> int:
    manager = _load(args)
    out = _output_dir(args)
    scenario = manager.build_scenario(
        demand_path=args.demand,
        horizon_steps=args.horizon,
        apply_steps=args.apply_steps,
        seed=args.seed,
        log_nodes=args.verbose_solver,
    )
    metrics = RunMetrics(scenario.label)
    trace = run_cosim(scenario, metrics)
    if not trace.rows:
        raise ScenarioError(manager.path, "demand profile produced no steps")
    kpis = compute_kpis(trace)

    manifest = make_manifest("simulate", out, manager.checksum, manager.path, args.seed)
    write_trace_csv(out / "trace.csv", trace, manifest)
    write_horizons_csv(out / "horizons.csv", trace, manifest)
    write_kpis_json(out / "kpis.json", kpis, trace, manifest)
    if args.verbose_solver:
        write_nodes_csv(out / "nodes.csv", trace, manifest)
    metrics.write(out / "metrics.prom")

    for record in trace.horizons:
        if not record.converged:
            _say(f"warning: horizon {record.index} (t0={record.t0}) SLP did not converge")
    _say(
        f"{trace.n_steps} steps, {len(trace.horizons)} horizons: availability {kpis.availability:.2f}%, "
        f"system efficiency {kpis.system_eff:.2f}%, peak mean temperature {kpis.peak_mean_temp:.1f} C"
    )
    _say(f"artifacts written to {out}")
    return EXIT_OK


def _sweep_points(path: Optional[Path]) -> list[SweepPoint]:
    if path is None:
        return list(DEFAULT_SWEEP)
    if not path.exists():
        raise ScenarioError(path, "sweep file does not exist")
    try:
        points = TypeAdapter(list[SweepPoint]).validate_python(json.loads(path.read_text()))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise ScenarioError(path, f"invalid sweep: {exc}") from exc
    if not points:
        raise ScenarioError(path, "sweep list is empty")
    return points


def cmd_pareto(args: argparse.Namespace) -> int:
    manager = _load(args)
    out = _output_dir(args)
    points = _sweep_points(args.sweep)
    try:
        scenario = manager.build_scenario(demand_path=args.demand, seed=args.seed)
        outcomes = pareto_sweep(scenario, points, workers=max(1, args.workers))
    except ValueError as exc:
        if isinstance(exc, (ScenarioError, DemandError, PwlError)):
            raise
        raise ScenarioError(args.sweep, str(exc)) from exc

    manifest = make_manifest("pareto", out, manager.checksum, manager.path, args.seed)
    write_pareto_csv(out / "pareto.csv", outcomes, manifest)
    write_pareto_json(out / "pareto.json", outcomes, manifest)
    write_radar_csv(out / "radar.csv", radar_table(outcomes), manifest)

    metrics = RunMetrics("pareto")
    for outcome in outcomes:
        counters = outcome.counters
        metrics.record_solve(
            int(counters.get("bnb_nodes", 0)),
            int(counters.get("lp_solves", 0)),
            int(counters.get("simplex_iterations", 0)),
        )
    metrics.write(out / "metrics.prom")

    failed = [o for o in outcomes if not o.ok]
    for outcome in outcomes:
        if outcome.kpis is None:
            _say(f"{outcome.label}: FAILED ({outcome.error})")
        else:
            k = outcome.kpis
            _say(
                f"{outcome.label}: inverter {k.inverter_eff:.2f}% battery {k.battery_eff:.2f}% "
                f"system {k.system_eff:.2f}% peak {k.peak_mean_temp:.1f} C"
            )
    _say(f"artifacts written to {out}")
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    manager = _load(args)
    if args.config is not None:
        manager.require_sections("thermal")
    cfg = manager.config.calibration
    dt = manager.config.simulation.dt
    ok = True
    for m, model in enumerate(manager.build_strings()):
        report = calibration_report(model, dt=dt, soc=cfg.soc)
        checks = {
            "sensitivity": abs(report.sensitivity - cfg.target) <= cfg.tolerance,
            "lumped_deviation": report.lumped_deviation <= cfg.max_lumped_deviation,
            "root_residual": report.root_residual <= cfg.max_root_residual,
        }
        _say(
            f"string {m}: sensitivity {report.sensitivity:.5f} C/kW "
            f"(target {cfg.target} +/- {cfg.tolerance}), lumped-vs-FDM deviation "
            f"{report.lumped_deviation:.4f} C, ECM root residual {report.root_residual:.2e}"
        )
        for name, passed in checks.items():
            if not passed:
                _say(f"string {m}: gate '{name}' failed")
                logger.warning("Calibration gate %s failed for string %d", name, m)
        ok = ok and all(checks.values())
    return EXIT_OK if ok else EXIT_CALIBRATION


COMMANDS = {
    "simulate": cmd_simulate,
    "pareto": cmd_pareto,
    "calibrate": cmd_calibrate,
}


def main(argv: Optional[list[str]] = None) -> int:
    load_dotenv()
    args = _parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, DemandError, PwlError, HorizonInputError) as exc:
        _say(f"input error: {exc}")
        return EXIT_INPUT
    except OSError as exc:
        _say(f"input error: {exc.filename or ''}: {exc.strerror or exc}")
        return EXIT_INPUT
    except (CosimError, SlpError, LexicographicError) as exc:
        _say(f"solver failure: {exc}")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
