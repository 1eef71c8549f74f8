"""Closed loop: EMS horizon, controller solve, plant application, state feedback."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..control.horizon import HorizonInput, HorizonInputError
from ..control.slp import SlpError, slp_solve
from ..metrics import RunMetrics
from ..models import BnbConfig, ControllerConfig, SlpConfig
from ..plant.derating import pi_derate_update
from ..plant.ecm import InfeasiblePowerError
from ..plant.string_model import StringModel, deliverable_setpoint, plant_apply
from ..plant.thermal import StringState
from .ems import ems_horizon
from .trace import HorizonRecord, TraceLog, TraceRow

logger = logging.getLogger(__name__)


class CosimError(RuntimeError):
    def __init__(self, horizon: int, message: str) -> None:
        super().__init__(f"horizon {horizon}: {message}")
        self.horizon = horizon


@dataclass(frozen=True, eq=False)
class Scenario:
    """Runtime form of a scenario: plant models, demand profile and solver settings."""

    strings: tuple[StringModel, ...]
    initial_soc: tuple[float, ...]
    initial_temp: tuple[float, ...]
    demand: np.ndarray
    dt: float = 900.0
    horizon_steps: int = 8
    apply_steps: int = 8
    duration_steps: int = 96
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    bnb: BnbConfig = field(default_factory=BnbConfig)
    slp: SlpConfig = field(default_factory=SlpConfig)
    label: str = "run"

    def __post_init__(self) -> None:
        n = len(self.strings)
        if n < 1 or len(self.initial_soc) != n or len(self.initial_temp) != n:
            raise ValueError("initial state must list one entry per string")
        if not 1 <= self.apply_steps <= self.horizon_steps:
            raise ValueError("apply_steps must lie in [1, horizon_steps]")
        if self.duration_steps < self.apply_steps:
            raise ValueError("duration_steps must be at least apply_steps")

    @property
    def fleet_power(self) -> float:
        return float(sum(model.p_nominal for model in self.strings))

    def initial_states(self) -> list[StringState]:
        return [
            model.initial_state(soc, temp)
            for model, soc, temp in zip(self.strings, self.initial_soc, self.initial_temp)
        ]


def run_cosim(scenario: Scenario, metrics: RunMetrics | None = None) -> TraceLog:
    strings = scenario.strings
    states = scenario.initial_states()
    dt = scenario.dt
    dt_h = dt / 3600.0
    trace = TraceLog(n_strings=len(strings), dt=dt)
    t0 = 0
    index = 0

    while t0 < scenario.duration_steps:
        window, truncated = ems_horizon(scenario.demand, t0, scenario.horizon_steps)
        if window.size == 0:
            logger.warning("Demand profile ends at step %d before the run duration", t0)
            break
        k_first = [pi_derate_update(model.controller, state)[0] for model, state in zip(strings, states)]
        start = time.perf_counter()
        try:
            horizon = HorizonInput.at_state(
                strings,
                window,
                dt,
                [s.soc for s in states],
                [s.temp_mean for s in states],
                scenario.controller,
                k_first,
                label=f"h{index}",
            )
            plan = slp_solve(horizon, scenario.slp, scenario.bnb, metrics)
        except (SlpError, HorizonInputError) as exc:
            raise CosimError(index, str(exc)) from exc
        wall = time.perf_counter() - start
        if metrics is not None:
            metrics.observe_horizon(wall)

        n_apply = min(scenario.apply_steps, window.size, scenario.duration_steps - t0)
        dispatch = plan.dispatch()
        for t in range(n_apply):
            mode = plan.modes[t]
            for m, model in enumerate(strings):
                state = states[m]
                setpoint = min(max(float(dispatch.served[m, t]), 0.0), model.p_nominal)
                shortfall = 0.0
                try:
                    step = plant_apply(model, state, setpoint, mode, dt)
                except InfeasiblePowerError as exc:
                    k_preview = pi_derate_update(model.controller, state)[0]
                    reduced = deliverable_setpoint(model, state, setpoint, k_preview, mode)
                    logger.warning(
                        "[h%d] string %d step %d: %s; setpoint %.2f -> %.2f kW",
                        index, m, t0 + t, exc, setpoint, reduced,
                    )
                    if metrics is not None:
                        metrics.record_clamp()
                    step = plant_apply(model, state, reduced, mode, dt)
                    shortfall = setpoint - reduced
                trace.rows.append(
                    TraceRow(
                        step=t0 + t,
                        string=m,
                        mode=mode.value,
                        demand=float(window[t]),
                        setpoint=float(dispatch.setpoint[m, t]),
                        served=step.setpoint,
                        applied=step.applied,
                        p_inv=step.inverter,
                        p_heat=step.heat,
                        p_derate=step.derate_loss,
                        p_avail=float(dispatch.unservable[m, t]) + shortfall + step.overflow / dt_h,
                        p_overflow=step.overflow / dt_h,
                        p_dc=step.dc,
                        p_stored=step.stored,
                        current=step.current,
                        soc=step.state.soc,
                        temp_mean=step.state.temp_mean,
                        k_derate=step.k_derate,
                        b_high=int(plan.b_high[m, t]),
                        b_low=int(plan.b_low[m, t]),
                        b_inv=int(plan.b_inv[m, t]),
                        temps=tuple(float(x) for x in step.state.temps),
                    )
                )
                states[m] = step.state

        trace.horizons.append(
            HorizonRecord(
                index=index,
                t0=t0,
                steps=int(window.size),
                applied_steps=n_apply,
                init_soc=tuple(float(s) for s in horizon.init_soc),
                init_temp=tuple(float(x) for x in horizon.init_temp),
                slp_iterations=plan.slp_iterations,
                converged=plan.converged,
                stage_optima=plan.stage_optima,
                stage_values=plan.stage_values,
                wall_time=wall,
                truncated=truncated,
                node_log=tuple(plan.node_log or ()),
            )
        )
        logger.info(
            "[h%d] t0=%d iterations=%d converged=%s wall=%.2fs",
            index, t0, plan.slp_iterations, plan.converged, wall,
        )
        t0 += n_apply
        index += 1
    return trace
