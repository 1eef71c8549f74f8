"""Temperature-based derating: the plant-side PI controller and the optimizer's LUT."""

from __future__ import annotations

from dataclasses import dataclass

from ..piecewise import PwlTable, pwl_build
from .thermal import StringState


@dataclass(frozen=True)
class PiDerateController:
    kp: float = 0.035
    ki: float = 0.0035
    t_start: float = 45.0
    t_stop: float = 60.0

    def __post_init__(self) -> None:
        if self.kp < 0 or self.ki < 0:
            raise ValueError("PI gains must be non-negative")
        if self.t_start >= self.t_stop:
            raise ValueError("t_start must be below t_stop")


def default_derate_table(ctrl: PiDerateController) -> PwlTable:
    return pwl_build([(ctrl.t_start, 1.0), (ctrl.t_stop, 0.0)])


def _clamp(value: float, lo: float = 0.0, hi: float = 1.0) -> float:
    return min(hi, max(lo, value))


def pi_derate_update(ctrl: PiDerateController, state: StringState) -> tuple[float, float]:
    """Derating factor for the coming step and the updated integrator.

    The output uses the integrator value carried into the step. The integrator then
    accumulates the signed error, floored at zero and capped so the control action
    never exceeds full curtailment.
    """
    temp = state.temp_mean
    error = temp - ctrl.t_start
    positive = max(0.0, error)
    k = _clamp(1.0 - (ctrl.kp * positive + ctrl.ki * state.pi_integral))
    if temp >= ctrl.t_stop:
        k = 0.0

    integral = max(0.0, state.pi_integral + error)
    if ctrl.ki > 0:
        integral = min(integral, max(0.0, (1.0 - ctrl.kp * positive) / ctrl.ki))
    return k, integral
