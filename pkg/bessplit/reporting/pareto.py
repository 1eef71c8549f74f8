"""Weight sweep over the inverter and battery loss weights."""

from __future__ import annotations

import asyncio
import logging
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import replace
from typing import Sequence

from ..metrics import RunMetrics
from ..models import DEFAULT_SWEEP, SweepOutcome, SweepPoint
from ..sim.cosim import CosimError, Scenario, run_cosim
from .kpi import KPI_FIELDS, compute_kpis

logger = logging.getLogger(__name__)

COUNTER_SAMPLES = {
    "lp_solves": "bsplit_lp_solves_total",
    "bnb_nodes": "bsplit_bnb_nodes_total",
    "simplex_iterations": "bsplit_simplex_iterations_total",
    "slp_iterations": "bsplit_slp_iterations_total",
    "ecm_clamps": "bsplit_ecm_clamps_total",
}


def sweep_scenario(base: Scenario, point: SweepPoint) -> Scenario:
    """Same scenario with W1 = W2 = 1 and the point's W3, W4."""
    weights = (1.0, 1.0, point.w3, point.w4)
    controller = base.controller.model_copy(update={"weights": weights})
    return replace(base, controller=controller, label=point.label)


def run_point(base: Scenario, point: SweepPoint) -> SweepOutcome:
    metrics = RunMetrics(point.label)
    try:
        trace = run_cosim(sweep_scenario(base, point), metrics)
        kpis = compute_kpis(trace)
    except (CosimError, ValueError) as exc:
        logger.warning("Sweep point %s failed: %s", point.label, exc)
        return SweepOutcome(label=point.label, w3=point.w3, w4=point.w4, error=str(exc))
    counters = {key: metrics.value(sample) for key, sample in COUNTER_SAMPLES.items()}
    return SweepOutcome(label=point.label, w3=point.w3, w4=point.w4, kpis=kpis, counters=counters)


def _check_points(points: Sequence[SweepPoint]) -> None:
    if not points:
        raise ValueError("sweep needs at least one point")
    labels = [p.label for p in points]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate sweep labels in {labels}")


async def pareto_sweep_async(
    base: Scenario, points: Sequence[SweepPoint] = DEFAULT_SWEEP, workers: int = 1
) -> list[SweepOutcome]:
    """Run every point from the same initial state; results are ordered by label."""
    _check_points(points)
    loop = asyncio.get_running_loop()
    pool: Executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else ThreadPoolExecutor(max_workers=1)
    with pool:
        results = await asyncio.gather(
            *(loop.run_in_executor(pool, run_point, base, point) for point in points)
        )
    return sorted(results, key=lambda outcome: outcome.label)


def pareto_sweep(
    base: Scenario, points: Sequence[SweepPoint] = DEFAULT_SWEEP, workers: int = 1
) -> list[SweepOutcome]:
    return asyncio.run(pareto_sweep_async(base, points, workers))


def radar_table(outcomes: Sequence[SweepOutcome]) -> list[dict[str, float | str]]:
    """KPIs min-max scaled across the successful points; a constant KPI maps to 1."""
    good = [o for o in outcomes if o.kpis is not None]
    rows: list[dict[str, float | str]] = [{"label": o.label} for o in good]
    for name in KPI_FIELDS:
        values = [float(getattr(o.kpis, name)) for o in good]
        if not values:
            continue
        lo, hi = min(values), max(values)
        for row, value in zip(rows, values):
            row[name] = 1.0 if hi - lo <= 1e-12 else (value - lo) / (hi - lo)
    return rows
