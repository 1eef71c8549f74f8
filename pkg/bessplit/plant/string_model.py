"""One battery string with its inverter: the electro-thermal plant step and calibration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..piecewise import PwlTable
from .derating import PiDerateController, default_derate_table, pi_derate_update
from .ecm import (
    CellResistanceModel,
    InfeasiblePowerError,
    Mode,
    StringElectricalParams,
    coulomb_update,
    heat_power,
    max_discharge_power,
    ocv,
    solve_current,
    total_resistance,
)
from .inverter import InverterModel
from .thermal import StringState, ThermalParams, fdm_advance, lumped_step

logger = logging.getLogger(__name__)

DELIVERABLE_MARGIN = 0.999


@dataclass(frozen=True)
class StringModel:
    electrical: StringElectricalParams = field(default_factory=StringElectricalParams)
    resistance: CellResistanceModel = field(default_factory=CellResistanceModel)
    thermal: ThermalParams = field(default_factory=ThermalParams)
    controller: PiDerateController = field(default_factory=PiDerateController)
    derate_table: PwlTable | None = None
    inverter: InverterModel | None = None

    def __post_init__(self) -> None:
        if self.derate_table is None:
            object.__setattr__(self, "derate_table", default_derate_table(self.controller))
        if self.inverter is None:
            object.__setattr__(self, "inverter", InverterModel.default(self.electrical.p_nominal))

    @property
    def p_nominal(self) -> float:
        return self.electrical.p_nominal

    def resistance_at(self, soc: float, temp: float, blend: bool = True) -> float:
        scale = (self.electrical.n_series, self.electrical.n_parallel)
        return total_resistance(self.resistance, scale, soc, temp, blend)

    def ocv_at(self, soc: float, mode: Mode) -> float:
        return ocv(self.electrical, soc, mode)

    def initial_state(self, soc: float, temp: float | None = None) -> StringState:
        return StringState.uniform(soc, self.thermal.t_air if temp is None else temp, self.thermal)


@dataclass(frozen=True)
class ElectricalResponse:
    """Powers in kW for one step at a served AC setpoint."""

    applied: float
    inverter: float
    dc: float
    current: float
    stored: float
    heat: float
    ocv: float
    resistance: float


def electrical_response(
    model: StringModel,
    served_kw: float,
    k_derate: float,
    mode: Mode,
    ocv_v: float,
    r_ohm: float,
) -> ElectricalResponse:
    """Split an AC setpoint into inverter loss, battery heat and stored power.

    Raises ``InfeasiblePowerError`` when the DC discharge power is not deliverable.
    """
    applied = k_derate * served_kw
    inverter = model.inverter.loss(applied, mode)
    if mode == Mode.CHARGE:
        dc = applied - inverter
        if dc < 0.0:
            dc, inverter = 0.0, applied
    else:
        dc = applied + inverter
    current = solve_current(ocv_v, r_ohm, dc * 1000.0, mode)
    return ElectricalResponse(
        applied=applied,
        inverter=inverter,
        dc=dc,
        current=current,
        stored=ocv_v * current / 1000.0,
        heat=heat_power(current, r_ohm) / 1000.0,
        ocv=ocv_v,
        resistance=r_ohm,
    )


def deliverable_setpoint(
    model: StringModel, state: StringState, setpoint: float, k_derate: float, mode: Mode
) -> float:
    """Largest served setpoint not above ``setpoint`` whose DC draw stays deliverable."""
    ocv_v = model.ocv_at(state.soc, mode)
    r_ohm = model.resistance_at(state.soc, state.temp_mean)
    return deliverable_power(model, setpoint, k_derate, mode, ocv_v, r_ohm)


def deliverable_power(
    model: StringModel, setpoint: float, k_derate: float, mode: Mode, ocv_v: float, r_ohm: float
) -> float:
    if mode == Mode.CHARGE or k_derate <= 0.0:
        return setpoint
    limit_kw = DELIVERABLE_MARGIN * max_discharge_power(ocv_v, r_ohm) / 1000.0
    lo, hi = 0.0, setpoint
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        applied = k_derate * mid
        if applied + model.inverter.loss(applied, mode) <= limit_kw:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class PlantStep:
    state: StringState
    setpoint: float
    applied: float
    derate_loss: float
    heat: float
    overflow: float
    inverter: float
    stored: float
    dc: float
    current: float
    k_derate: float
    convective_j: float


def plant_apply(
    model: StringModel, state: StringState, setpoint: float, mode: Mode, dt: float
) -> PlantStep:
    """Apply one served setpoint (kW) for ``dt`` seconds.

    ``overflow`` is the energy (kWh) clipped by the SOC bounds.
    """
    if setpoint < 0.0 or setpoint > model.p_nominal * (1.0 + 1e-9):
        raise ValueError(f"setpoint {setpoint!r} outside [0, {model.p_nominal}]")
    setpoint = min(setpoint, model.p_nominal)
    k, integral = pi_derate_update(model.controller, state)

    ocv_v = model.ocv_at(state.soc, mode)
    r_ohm = model.resistance_at(state.soc, state.temp_mean)
    response = electrical_response(model, setpoint, k, mode, ocv_v, r_ohm)

    if mode == Mode.CHARGE:
        counted = coulomb_update(state.soc, response.current, 0.0, dt, model.electrical.q_nominal)
    else:
        counted = coulomb_update(state.soc, 0.0, response.current, dt, model.electrical.q_nominal)
    temps, convective = fdm_advance(state.temps, model.thermal, response.heat * 1000.0, dt)

    new_state = StringState(
        soc=counted.soc, temps=temps, pi_integral=integral, k_derate_applied=k
    )
    return PlantStep(
        state=new_state,
        setpoint=setpoint,
        applied=response.applied,
        derate_loss=setpoint - response.applied,
        heat=response.heat,
        overflow=counted.overflow_ah * ocv_v / 1000.0,
        inverter=response.inverter,
        stored=response.stored,
        dc=response.dc,
        current=response.current,
        k_derate=k,
        convective_j=convective,
    )


def calibrate_sensitivity(
    model: StringModel, power_kw: float | None = None, dt: float = 900.0, soc: float = 0.5
) -> float:
    """Mean-temperature rise per kW over one step at ``power_kw`` discharge from ambient."""
    power = model.p_nominal if power_kw is None else power_kw
    if power <= 0.0:
        return 0.0
    t_air = model.thermal.t_air
    response = electrical_response(
        model, power, 1.0, Mode.DISCHARGE, model.ocv_at(soc, Mode.DISCHARGE),
        model.resistance_at(soc, t_air),
    )
    temps, _ = fdm_advance(np.full(model.thermal.n_nodes, t_air), model.thermal, response.heat * 1000.0, dt)
    return (float(np.mean(temps)) - t_air) / power


@dataclass(frozen=True)
class CalibrationReport:
    sensitivity: float
    lumped_deviation: float
    root_residual: float


def lumped_deviation(
    model: StringModel, heat_kw: float, dt: float = 900.0, duration_s: float = 86400.0
) -> float:
    """Largest gap between the FDM mean and the lumped recursion under constant heat."""
    params = model.thermal
    temps = np.full(params.n_nodes, params.t_air)
    lumped = params.t_air
    worst = 0.0
    for _ in range(int(round(duration_s / dt))):
        temps, _ = fdm_advance(temps, params, heat_kw * 1000.0, dt)
        lumped = lumped_step(lumped, params, heat_kw * 1000.0, dt)
        worst = max(worst, abs(float(np.mean(temps)) - lumped))
    return worst


def ecm_root_residual(model: StringModel) -> float:
    """Worst relative power residual of the current solution over a SOC/temperature grid."""
    worst = 0.0
    for soc in np.linspace(0.0, 1.0, 11):
        for temp in (model.thermal.t_air, 45.0, 60.0):
            r_ohm = model.resistance_at(float(soc), temp)
            for mode in (Mode.CHARGE, Mode.DISCHARGE):
                v = model.ocv_at(float(soc), mode)
                top = model.p_nominal * 1000.0
                if mode == Mode.DISCHARGE:
                    top = min(top, 0.99 * max_discharge_power(v, r_ohm))
                for power in np.linspace(top / 10.0, top, 10):
                    try:
                        current = solve_current(v, r_ohm, float(power), mode)
                    except InfeasiblePowerError:
                        continue
                    sign = 1.0 if mode == Mode.CHARGE else -1.0
                    back = v * current + sign * current * current * r_ohm
                    worst = max(worst, abs(back - power) / power)
    return worst


def calibration_report(model: StringModel, dt: float = 900.0, soc: float = 0.5) -> CalibrationReport:
    sensitivity = calibrate_sensitivity(model, dt=dt, soc=soc)
    half = electrical_response(
        model, model.p_nominal / 2.0, 1.0, Mode.DISCHARGE, model.ocv_at(soc, Mode.DISCHARGE),
        model.resistance_at(soc, model.thermal.t_air),
    )
    deviation = lumped_deviation(model, half.heat, dt)
    report = CalibrationReport(
        sensitivity=sensitivity, lumped_deviation=deviation, root_residual=ecm_root_residual(model)
    )
    logger.debug("Calibration %s", report)
    return report
