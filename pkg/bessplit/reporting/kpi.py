"""Energy-weighted KPIs of a co-simulation trace, in percent."""

from __future__ import annotations

import numpy as np

from ..models import KpiReport
from ..sim.trace import TraceLog

KPI_FIELDS = (
    "availability",
    "derating_eff",
    "inverter_eff",
    "battery_eff",
    "system_eff",
    "peak_mean_temp",
    "final_soc_spread",
)


def _share_lost(loss_kwh: float, base_kwh: float) -> float:
    return 100.0 * (1.0 - loss_kwh / base_kwh)


def compute_kpis(trace: TraceLog) -> KpiReport:
    """Loss KPIs use the commanded setpoints as denominator; availability uses |demand|.

    System efficiency counts inverter and battery losses only, so it equals
    ``inverter_eff + battery_eff - 100`` exactly.
    """
    if not trace.rows:
        raise ValueError("cannot compute KPIs of an empty trace")
    dt_h = trace.dt / 3600.0
    energy = {name: float(np.sum(trace.column(name))) * dt_h for name in (
        "setpoint", "p_inv", "p_heat", "p_derate", "p_avail"
    )}
    demand = float(np.sum(np.abs(trace.fleet_demand()))) * dt_h

    availability = _share_lost(energy["p_avail"], demand) if demand > 0.0 else 100.0
    base = energy["setpoint"]
    degenerate = base <= 0.0
    if degenerate:
        derating = inverter = battery = 100.0
    else:
        derating = _share_lost(energy["p_derate"], base)
        inverter = _share_lost(energy["p_inv"], base)
        battery = _share_lost(energy["p_heat"], base)

    final_step = max(r.step for r in trace.rows)
    final_soc = [r.soc for r in trace.rows if r.step == final_step]
    return KpiReport(
        availability=availability,
        derating_eff=derating,
        inverter_eff=inverter,
        battery_eff=battery,
        system_eff=inverter + battery - 100.0,
        peak_mean_temp=float(np.max(trace.column("temp_mean"))),
        final_soc_spread=float(max(final_soc) - min(final_soc)),
        degenerate=degenerate,
    )
