"""Electro-thermal string plant: ECM, FDM thermal field, derating and inverter."""

from __future__ import annotations

from .derating import PiDerateController, default_derate_table, pi_derate_update
from .ecm import (
    CellResistanceModel,
    CoulombResult,
    EcmDomainError,
    InfeasiblePowerError,
    Mode,
    ModeViolationError,
    StringElectricalParams,
    coulomb_update,
    heat_power,
    ocv,
    solve_current,
    total_resistance,
)
from .inverter import InverterModel
from .string_model import (
    CalibrationReport,
    ElectricalResponse,
    PlantStep,
    StringModel,
    calibrate_sensitivity,
    calibration_report,
    deliverable_setpoint,
    electrical_response,
    plant_apply,
)
from .thermal import StringState, ThermalParams, fdm_advance, fdm_step, lumped_step

__all__ = [
    "CalibrationReport",
    "CellResistanceModel",
    "CoulombResult",
    "EcmDomainError",
    "ElectricalResponse",
    "InfeasiblePowerError",
    "InverterModel",
    "Mode",
    "ModeViolationError",
    "PiDerateController",
    "PlantStep",
    "StringElectricalParams",
    "StringModel",
    "StringState",
    "ThermalParams",
    "calibrate_sensitivity",
    "calibration_report",
    "coulomb_update",
    "default_derate_table",
    "deliverable_setpoint",
    "electrical_response",
    "fdm_advance",
    "fdm_step",
    "heat_power",
    "lumped_step",
    "ocv",
    "pi_derate_update",
    "plant_apply",
    "solve_current",
    "total_resistance",
]
