from __future__ import annotations

from .kpi import KPI_FIELDS, compute_kpis
from .pareto import pareto_sweep, pareto_sweep_async, radar_table, run_point, sweep_scenario

__all__ = [
    "KPI_FIELDS",
    "compute_kpis",
    "pareto_sweep",
    "pareto_sweep_async",
    "radar_table",
    "run_point",
    "sweep_scenario",
]
