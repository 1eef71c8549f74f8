"""Rint equivalent-circuit model of one battery string."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from ..piecewise import PwlTable, pwl_build

# Typical NMC cell OCV at SOC 0.0, 0.1, ..., 1.0 (volts per cell, discharge branch).
NMC_CELL_OCV = (3.00, 3.45, 3.55, 3.60, 3.65, 3.70, 3.75, 3.83, 3.93, 4.05, 4.20)
CHARGE_HYSTERESIS_V = 0.05

DEFAULT_R_SOC = ((0.0, 40.0), (0.02, 24.0), (0.05, 10.0), (0.08, 4.5), (0.1, 2.5))
DEFAULT_R_TEMP = ((25.0, 2.5), (40.0, 1.9), (60.0, 1.2), (80.0, 0.75))


class Mode(str, Enum):
    CHARGE = "charge"
    DISCHARGE = "discharge"

    @classmethod
    def from_demand(cls, demand_kw: float) -> Mode:
        return cls.CHARGE if demand_kw >= 0.0 else cls.DISCHARGE


class EcmDomainError(ValueError):
    pass


class InfeasiblePowerError(ValueError):
    """Discharge request beyond the string's deliverable power ``ocv**2 / (4 r)``."""

    def __init__(self, requested_w: float, max_power_w: float) -> None:
        super().__init__(
            f"requested {requested_w:.1f} W exceeds deliverable power {max_power_w:.1f} W"
        )
        self.requested_w = requested_w
        self.max_power_w = max_power_w


class ModeViolationError(ValueError):
    pass


def default_ocv_discharge_cell() -> PwlTable:
    return pwl_build((i / 10.0, v) for i, v in enumerate(NMC_CELL_OCV))


@dataclass(frozen=True)
class CellResistanceModel:
    """Cell resistance in mOhm: SOC branch below the threshold, temperature branch above."""

    r_soc: PwlTable = field(default_factory=lambda: pwl_build(DEFAULT_R_SOC))
    r_temp: PwlTable = field(default_factory=lambda: pwl_build(DEFAULT_R_TEMP))
    r_temp_max: float = 2.5
    soc_threshold: float = 0.1
    eps_soc: float = 0.01

    def __post_init__(self) -> None:
        if self.r_temp_max <= 0:
            raise ValueError("r_temp_max must be positive")
        if not 0.0 <= self.eps_soc < self.soc_threshold:
            raise ValueError("eps_soc must lie in [0, soc_threshold)")


@dataclass(frozen=True)
class StringElectricalParams:
    p_nominal: float = 100.0
    q_nominal: float = 156.0
    n_series: int = 192
    n_parallel: int = 2
    ocv_charge: PwlTable = field(
        default_factory=lambda: default_ocv_discharge_cell().shifted(CHARGE_HYSTERESIS_V).scaled(192)
    )
    ocv_discharge: PwlTable = field(default_factory=lambda: default_ocv_discharge_cell().scaled(192))

    def __post_init__(self) -> None:
        if self.p_nominal <= 0 or self.q_nominal <= 0:
            raise ValueError("p_nominal and q_nominal must be positive")
        if self.n_series < 1 or self.n_parallel < 1:
            raise ValueError("n_series and n_parallel must be >= 1")
        for name in ("ocv_charge", "ocv_discharge"):
            if not getattr(self, name).is_strictly_increasing():
                raise ValueError(f"{name} must be strictly increasing in SOC")

    @property
    def resistance_scale(self) -> float:
        return self.n_series / self.n_parallel


def _check_soc(soc: float) -> None:
    if not 0.0 <= soc <= 1.0:
        raise EcmDomainError(f"soc {soc!r} outside [0, 1]")


def cell_resistance(model: CellResistanceModel, soc: float, temp: float, blend: bool = True) -> float:
    """Cell resistance in mOhm.

    With ``blend`` the two branches are mixed linearly inside the ``eps_soc`` band around
    the threshold; without it the branch switches hard at the threshold.
    """
    _check_soc(soc)
    r_temp = model.r_temp(temp)
    r_low = model.r_soc(soc) * r_temp / model.r_temp_max
    if not blend:
        return r_low if soc <= model.soc_threshold else r_temp
    lo = model.soc_threshold - model.eps_soc
    hi = model.soc_threshold + model.eps_soc
    if soc <= lo:
        return r_low
    if soc >= hi:
        return r_temp
    weight = (soc - lo) / (hi - lo)
    return (1.0 - weight) * r_low + weight * r_temp


def total_resistance(
    model: CellResistanceModel,
    scale: tuple[int, int],
    soc: float,
    temp: float,
    blend: bool = True,
) -> float:
    """String resistance in ohm."""
    n_series, n_parallel = scale
    return cell_resistance(model, soc, temp, blend) * 1e-3 * n_series / n_parallel


def ocv(params: StringElectricalParams, soc: float, mode: Mode) -> float:
    _check_soc(soc)
    table = params.ocv_charge if mode == Mode.CHARGE else params.ocv_discharge
    return table(soc)


def max_discharge_power(ocv_v: float, r: float) -> float:
    return ocv_v * ocv_v / (4.0 * r)


def solve_current(ocv_v: float, r: float, power_w: float, mode: Mode) -> float:
    """Terminal current in ampere for a terminal power demand in watt.

    Uses the cancellation-free form of the quadratic root.
    """
    if r <= 0:
        raise EcmDomainError(f"resistance must be positive, got {r!r}")
    if power_w < 0:
        raise EcmDomainError(f"power must be non-negative, got {power_w!r}")
    if power_w == 0.0:
        return 0.0
    if mode == Mode.DISCHARGE:
        disc = ocv_v * ocv_v - 4.0 * r * power_w
        if disc < 0.0:
            raise InfeasiblePowerError(power_w, max_discharge_power(ocv_v, r))
        return 2.0 * power_w / (ocv_v + math.sqrt(disc))
    disc = ocv_v * ocv_v + 4.0 * r * power_w
    return 2.0 * power_w / (ocv_v + math.sqrt(disc))


def heat_power(current: float, r: float) -> float:
    if r < 0:
        raise EcmDomainError(f"resistance must be non-negative, got {r!r}")
    return current * current * r


@dataclass(frozen=True)
class CoulombResult:
    soc: float
    overflow_ah: float = 0.0


def coulomb_update(
    soc: float, i_charge: float, i_discharge: float, dt: float, q_nominal: float
) -> CoulombResult:
    if i_charge < 0 or i_discharge < 0:
        raise ModeViolationError("currents must be non-negative")
    if i_charge > 0 and i_discharge > 0:
        raise ModeViolationError("charge and discharge current both nonzero")
    raw = soc + (dt / 3600.0) / q_nominal * (i_charge - i_discharge)
    if raw > 1.0:
        return CoulombResult(soc=1.0, overflow_ah=(raw - 1.0) * q_nominal)
    if raw < 0.0:
        return CoulombResult(soc=0.0, overflow_ah=-raw * q_nominal)
    return CoulombResult(soc=raw)
