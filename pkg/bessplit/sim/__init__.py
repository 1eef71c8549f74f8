from __future__ import annotations

from .cosim import CosimError, Scenario, run_cosim
from .ems import DemandError, ems_horizon, load_profile_csv, price_arbitrage, two_level_prices
from .trace import TRACE_COLUMNS, HorizonRecord, TraceLog, TraceRow

__all__ = [
    "TRACE_COLUMNS",
    "CosimError",
    "DemandError",
    "HorizonRecord",
    "Scenario",
    "TraceLog",
    "TraceRow",
    "ems_horizon",
    "load_profile_csv",
    "price_arbitrage",
    "run_cosim",
    "two_level_prices",
]
