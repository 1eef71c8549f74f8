import numpy as np
import pytest

from bessplit.plant.ecm import (
    CellResistanceModel,
    EcmDomainError,
    InfeasiblePowerError,
    Mode,
    ModeViolationError,
    StringElectricalParams,
    cell_resistance,
    coulomb_update,
    heat_power,
    max_discharge_power,
    ocv,
    solve_current,
    total_resistance,
)


def test_resistance_branches():
    model = CellResistanceModel()
    assert total_resistance(model, (192, 2), 0.5, 25.0) == pytest.approx(0.240)
    assert cell_resistance(model, 0.0, 25.0) == pytest.approx(40.0)
    assert cell_resistance(model, 0.0, 80.0) == pytest.approx(12.0)
    with pytest.raises(EcmDomainError):
        cell_resistance(model, 1.2, 25.0)


def test_resistance_blend_is_continuous_at_threshold():
    model = CellResistanceModel()
    lo = cell_resistance(model, model.soc_threshold - model.eps_soc, 40.0)
    hi = cell_resistance(model, model.soc_threshold + model.eps_soc, 40.0)
    mid = cell_resistance(model, model.soc_threshold, 40.0)
    assert min(lo, hi) <= mid <= max(lo, hi)
    # hard switch keeps the SOC branch up to the threshold itself
    assert cell_resistance(model, 0.1, 40.0, blend=False) == pytest.approx(2.5 * 1.9 / 2.5)


def test_ocv_defaults():
    params = StringElectricalParams()
    assert ocv(params, 0.5, Mode.DISCHARGE) == pytest.approx(710.4)
    assert ocv(params, 1.0, Mode.DISCHARGE) == pytest.approx(806.4)
    assert ocv(params, 0.5, Mode.CHARGE) == pytest.approx(720.0)
    with pytest.raises(EcmDomainError):
        ocv(params, -0.1, Mode.CHARGE)


def test_solve_current_hand_values():
    assert solve_current(700.0, 0.25, 100_000.0, Mode.DISCHARGE) == pytest.approx(151.0, abs=0.01)
    assert solve_current(700.0, 0.25, 100_000.0, Mode.CHARGE) == pytest.approx(136.23, abs=0.01)
    assert solve_current(700.0, 0.25, 0.0, Mode.DISCHARGE) == 0.0


def test_solve_current_infeasible_reports_max_power():
    with pytest.raises(InfeasiblePowerError) as info:
        solve_current(700.0, 0.25, 500_000.0, Mode.DISCHARGE)
    assert info.value.max_power_w == pytest.approx(max_discharge_power(700.0, 0.25))


def test_solve_current_satisfies_power_balance():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        v = rng.uniform(550.0, 810.0)
        r = rng.uniform(0.05, 4.0)
        mode = Mode.CHARGE if rng.random() < 0.5 else Mode.DISCHARGE
        top = 100_000.0 if mode == Mode.CHARGE else min(100_000.0, 0.99 * max_discharge_power(v, r))
        power = rng.uniform(0.0, top)
        current = solve_current(v, r, power, mode)
        sign = 1.0 if mode == Mode.CHARGE else -1.0
        assert v * current + sign * current * current * r == pytest.approx(power, rel=1e-9, abs=1e-6)


def test_heat_power():
    assert heat_power(151.0, 0.25) == pytest.approx(5700.25)
    assert heat_power(136.23, 0.25) == pytest.approx(4640.0, abs=1.0)
    assert heat_power(0.0, 0.25) == 0.0


def test_coulomb_update():
    assert coulomb_update(0.5, 0.0, 100.0, 900.0, 156.0).soc == pytest.approx(0.5 - 25.0 / 156.0)
    assert coulomb_update(0.5, 0.0, 0.0, 900.0, 156.0).soc == 0.5

    clipped = coulomb_update(0.99, 100.0, 0.0, 900.0, 156.0)
    assert clipped.soc == 1.0
    assert clipped.overflow_ah == pytest.approx((0.99 + 25.0 / 156.0 - 1.0) * 156.0)

    with pytest.raises(ModeViolationError):
        coulomb_update(0.5, 1.0, 1.0, 900.0, 156.0)


@pytest.mark.parametrize("blend", [True, False])
def test_resistance_is_non_increasing_in_soc_and_temperature(blend):
    model = CellResistanceModel()
    socs = np.linspace(0.0, 1.0, 201)
    temps = np.linspace(0.0, 90.0, 91)
    grid = np.array([[cell_resistance(model, s, t, blend) for t in temps] for s in socs])
    assert np.all(np.diff(grid, axis=0) <= 1e-12)
    assert np.all(np.diff(grid, axis=1) <= 1e-12)
    assert np.all(grid > 0.0)


def test_coulomb_charge_then_discharge_returns_to_start():
    rng = np.random.default_rng(19)
    for _ in range(100):
        soc = float(rng.uniform(0.2, 0.8))
        current = float(rng.uniform(0.0, 100.0))
        up = coulomb_update(soc, current, 0.0, 900.0, 156.0)
        down = coulomb_update(up.soc, 0.0, current, 900.0, 156.0)
        assert up.overflow_ah == 0.0 and down.overflow_ah == 0.0
        assert down.soc == pytest.approx(soc, abs=1e-12)
