from dataclasses import replace

import numpy as np
import pytest

from bessplit.plant.ecm import InfeasiblePowerError, Mode
from bessplit.plant.inverter import InverterModel
from bessplit.plant.string_model import (
    StringModel,
    calibrate_sensitivity,
    calibration_report,
    deliverable_setpoint,
    electrical_response,
    plant_apply,
)
from bessplit.plant.thermal import StringState


def test_inverter_default_losses():
    inverter = InverterModel.default(100.0)
    assert inverter.loss(100.0, Mode.DISCHARGE) == pytest.approx(1.77)
    assert inverter.loss(100.0, Mode.CHARGE) == pytest.approx(1.93)
    assert inverter.loss(50.0, Mode.DISCHARGE) == pytest.approx(1.385)
    assert inverter.loss(0.0, Mode.CHARGE) == 0.0


def test_inverter_is_off_below_threshold():
    inverter = InverterModel.default(100.0)
    assert inverter.off_threshold == pytest.approx(0.1)
    assert inverter.loss(0.05, Mode.DISCHARGE) == 0.0
    assert inverter.loss(0.09, Mode.CHARGE) == 0.0
    assert inverter.loss(0.2, Mode.DISCHARGE) == pytest.approx(1.0 + 0.2 * 0.0077, rel=1e-6)
    always_on = InverterModel(inverter.charge, inverter.discharge)
    assert always_on.loss(1e-6, Mode.DISCHARGE) == pytest.approx(1.0, abs=1e-6)


def test_plant_apply_without_derating():
    model = StringModel()
    step = plant_apply(model, model.initial_state(0.5, 25.0), 50.0, Mode.DISCHARGE, 900.0)
    assert step.applied == pytest.approx(50.0)
    assert step.derate_loss == 0.0
    assert step.dc == pytest.approx(50.0 + step.inverter)
    assert step.state.soc < 0.5
    assert step.state.temp_mean > 25.0
    # AC energy identity of the discharge path
    assert step.stored == pytest.approx(step.dc + step.heat, rel=1e-9)


def test_plant_apply_partial_and_full_derating():
    model = StringModel()
    hot = StringState(soc=0.5, temps=np.full(10, 55.0))
    step = plant_apply(model, hot, 100.0, Mode.DISCHARGE, 900.0)
    assert step.k_derate == pytest.approx(0.65)
    assert step.applied == pytest.approx(65.0)
    assert step.derate_loss == pytest.approx(35.0)

    blocked = plant_apply(model, StringState(soc=0.5, temps=np.full(10, 65.0)), 80.0, Mode.DISCHARGE, 900.0)
    assert blocked.applied == 0.0
    assert blocked.derate_loss == pytest.approx(80.0)
    assert blocked.current == 0.0


def test_plant_apply_charge_clips_at_full():
    model = StringModel()
    step = plant_apply(model, model.initial_state(0.99), 100.0, Mode.CHARGE, 900.0)
    assert step.state.soc == 1.0
    assert step.overflow > 0.0


def test_plant_apply_rejects_out_of_range_setpoint():
    model = StringModel()
    with pytest.raises(ValueError):
        plant_apply(model, model.initial_state(0.5), 120.0, Mode.DISCHARGE, 900.0)


def test_deliverable_setpoint_near_empty():
    model = StringModel()
    state = model.initial_state(0.0, 25.0)
    with pytest.raises(InfeasiblePowerError):
        plant_apply(model, state, 100.0, Mode.DISCHARGE, 900.0)
    reduced = deliverable_setpoint(model, state, 100.0, 1.0, Mode.DISCHARGE)
    assert 0.0 < reduced < 100.0
    plant_apply(model, state, reduced, Mode.DISCHARGE, 900.0)
    assert deliverable_setpoint(model, state, 100.0, 1.0, Mode.CHARGE) == 100.0


def test_electrical_response_heat_matches_ecm():
    model = StringModel()
    response = electrical_response(model, 100.0, 1.0, Mode.DISCHARGE, 700.0, 0.25)
    assert response.dc == pytest.approx(101.77)
    assert response.heat == pytest.approx(response.current**2 * 0.25 / 1000.0)


def test_calibration_sensitivity_and_scaling():
    model = StringModel()
    sensitivity = calibrate_sensitivity(model)
    assert sensitivity == pytest.approx(0.012, abs=0.002)

    doubled = replace(model, thermal=replace(model.thermal, c_total=2 * model.thermal.c_total))
    assert calibrate_sensitivity(doubled) == pytest.approx(sensitivity / 2.0, rel=0.05)
    assert calibrate_sensitivity(model, power_kw=0.0) == 0.0


def test_calibration_report_gates_pass_on_defaults():
    report = calibration_report(StringModel())
    assert abs(report.sensitivity - 0.012) <= 0.004
    assert report.lumped_deviation <= 0.1
    assert report.root_residual <= 1e-9
