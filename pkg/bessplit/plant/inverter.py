from __future__ import annotations

from dataclasses import dataclass

from ..piecewise import PwlTable, pwl_build
from .ecm import Mode

FIXED_LOSS_FRACTION = 0.01
CHARGE_FULL_LOAD_FRACTION = 0.0193
DISCHARGE_FULL_LOAD_FRACTION = 0.0177
OFF_THRESHOLD_FRACTION = 1e-3


def default_inverter_tables(p_nominal: float) -> tuple[PwlTable, PwlTable]:
    fixed = FIXED_LOSS_FRACTION * p_nominal
    charge = pwl_build([(0.0, fixed), (p_nominal, CHARGE_FULL_LOAD_FRACTION * p_nominal)])
    discharge = pwl_build([(0.0, fixed), (p_nominal, DISCHARGE_FULL_LOAD_FRACTION * p_nominal)])
    return charge, discharge


@dataclass(frozen=True)
class InverterModel:
    """Conversion loss in kW as a function of AC power in kW.

    At or below ``off_threshold`` the inverter is off and loses nothing.
    """

    charge: PwlTable
    discharge: PwlTable
    off_threshold: float = 0.0

    @classmethod
    def default(cls, p_nominal: float) -> InverterModel:
        charge, discharge = default_inverter_tables(p_nominal)
        return cls(charge=charge, discharge=discharge, off_threshold=OFF_THRESHOLD_FRACTION * p_nominal)

    def table(self, mode: Mode) -> PwlTable:
        return self.charge if mode == Mode.CHARGE else self.discharge

    def loss(self, power_kw: float, mode: Mode) -> float:
        if power_kw <= max(0.0, self.off_threshold):
            return 0.0
        return self.table(mode)(power_kw)
