import numpy as np
import pytest

from bessplit.control.horizon import (
    DispatchPlan,
    ExtractionError,
    HorizonInput,
    HorizonInputError,
    build_horizon_model,
    extract_solution,
    heat_curve,
    normalize_objectives,
)
from bessplit.models import ControllerConfig
from bessplit.plant.ecm import Mode
from bessplit.plant.string_model import StringModel, electrical_response
from bessplit.solver.bnb import bnb_solve
from bessplit.solver.lexicographic import solve_lexicographic
from bessplit.solver.simplex import LpStatus
from tests.oracles import enumerate_binaries


def _horizon(demand, soc, temp=None, k_first=None, controller=None, n=None) -> HorizonInput:
    n = n or len(soc)
    temp = temp if temp is not None else [25.0] * n
    return HorizonInput.at_state(
        [StringModel()] * n, demand, 900.0, soc, temp, controller, k_first
    )


def test_structure_of_two_string_single_step_model():
    program = build_horizon_model(_horizon([50.0], [0.5, 0.5]))
    assert len(program.binaries) == 6
    names = [row.name for row in program.constraints]
    assert sum(name.startswith("demand[") for name in names) == 1
    assert sum(name.startswith("bal[") for name in names) == 2
    assert [stage.priority for stage in program.stages] == [2, 1]
    assert program.stages[0].label == "availability"
    assert program.stages[1].label == "derating+inverter+battery"


def test_full_string_charge_goes_to_availability_loss():
    program = build_horizon_model(_horizon([100.0], [1.0]))
    plan = extract_solution(program, solve_lexicographic(program).values)
    assert plan.b_high[0, 0] == 1
    assert plan.p_ch[0, 0] == pytest.approx(0.0, abs=1e-6)
    assert plan.p_avail_high[0, 0] > 90.0
    assert plan.slack_pos[0, 0] + plan.slack_neg[0, 0] == pytest.approx(0.0, abs=1e-6)
    dispatch = plan.dispatch()
    assert dispatch.served[0, 0] == pytest.approx(0.0, abs=1e-9)
    assert dispatch.unservable[0, 0] == pytest.approx(100.0, abs=1e-6)


def test_frozen_derating_fixes_derating_loss():
    program = build_horizon_model(_horizon([-100.0], [0.5], k_first=[0.65]))
    plan = extract_solution(program, solve_lexicographic(program).values)
    assert plan.p_b[0, 0] == pytest.approx(100.0)
    assert plan.p_derate_loss[0, 0] == pytest.approx(35.0, abs=1e-6)
    assert plan.balance_residual < 1e-6


def test_fully_derated_string_carries_no_fixed_inverter_loss():
    program = build_horizon_model(_horizon([-150.0], [0.5, 0.5], k_first=[0.0, 1.0]))
    plan = extract_solution(program, solve_lexicographic(program).values)
    assert plan.p_b[:, 0].tolist() == pytest.approx([50.0, 100.0], abs=1e-6)
    assert plan.p_derate_loss[0, 0] == pytest.approx(50.0, abs=1e-6)
    assert plan.p_inv[0, 0] == pytest.approx(0.0, abs=1e-6)
    assert plan.p_inv[1, 0] == pytest.approx(1.77, abs=1e-3)

def test_extraction_rejects_mutually_exclusive_flags():
    program = build_horizon_model(_horizon([-40.0], [0.5, 0.5]))
    values = solve_lexicographic(program).values.copy()
    layout = program.meta["layout"]
    values[layout["b_high"][0, 0]] = 1.0
    values[layout["b_low"][0, 0]] = 1.0
    with pytest.raises(ExtractionError) as info:
        extract_solution(program, values)
    assert info.value.violation > 1e-6


def test_inverter_only_loss_concentrates_power_on_one_string():
    controller = ControllerConfig(weights=(1.0, 1.0, 1.0, 0.0), eps_inv=0.0)
    program = build_horizon_model(_horizon([-50.0], [0.5, 0.5], controller=controller))
    plan = extract_solution(program, solve_lexicographic(program, controller.eps1).values)
    assert sorted(plan.b_inv[:, 0].tolist()) == [0, 1]
    assert sorted(plan.p_b[:, 0].tolist()) == pytest.approx([0.0, 50.0], abs=1e-6)


def test_small_horizons_match_enumeration():
    rng = np.random.default_rng(21)
    shapes = [(1, 1), (2, 1), (1, 2)]
    for index in range(200):
        n_strings, n_steps = shapes[index % len(shapes)]
        fleet = 100.0 * n_strings
        demand = list(rng.uniform(-fleet, fleet, size=n_steps))
        soc = list(rng.uniform(0.0, 1.0, size=n_strings))
        temp = list(rng.uniform(20.0, 58.0, size=n_strings))
        k_first = list(rng.uniform(0.3, 1.0, size=n_strings))
        program = build_horizon_model(_horizon(demand, soc, temp, k_first))
        assert len(program.binaries) <= 8
        sol = bnb_solve(program)
        assert sol.status == LpStatus.OPTIMAL, index
        expected = enumerate_binaries(program)
        assert sol.objective == pytest.approx(expected, rel=1e-5, abs=1e-7), index


def _plan(p_b, b_inv, p_cell=None, p_avail=None, mode=Mode.DISCHARGE, p_max=100.0) -> DispatchPlan:
    p_b = np.asarray(p_b, dtype=float).reshape(-1, 1)
    zeros = np.zeros_like(p_b)
    p_cell = p_b if p_cell is None else np.asarray(p_cell, dtype=float).reshape(-1, 1)
    bits = np.zeros(p_b.shape, dtype=int)
    return DispatchPlan(
        p_b=p_b,
        p_ch=p_cell if mode == Mode.CHARGE else zeros,
        p_dch=zeros if mode == Mode.CHARGE else p_cell,
        p_inv=zeros,
        p_heat=zeros,
        p_avail_high=zeros if p_avail is None else np.asarray(p_avail, dtype=float).reshape(-1, 1),
        p_avail_low=zeros,
        p_derate_loss=zeros,
        slack_pos=zeros,
        slack_neg=zeros,
        soc=np.full((p_b.shape[0], 2), 0.5),
        temp_pred=np.full((p_b.shape[0], 2), 25.0),
        b_high=bits.copy(),
        b_low=bits.copy(),
        b_inv=np.asarray(b_inv, dtype=int).reshape(-1, 1),
        modes=(mode,),
        demand=np.array([-float(p_b.sum())]),
        dt=900.0,
        balance_residual=0.0,
        p_max=np.full(p_b.shape[0], p_max),
    )


def test_inverter_off_string_gets_no_setpoint():
    plan = _plan([1e-5, 50.0], [0, 1])
    dispatch = plan.dispatch()
    assert dispatch.setpoint[0, 0] == 0.0
    assert dispatch.served[0, 0] == 0.0
    assert dispatch.served[1, 0] == pytest.approx(50.0 + 1e-5)
    assert dispatch.setpoint.sum() == pytest.approx(plan.p_b.sum())


def test_residue_beyond_the_active_string_capacity_is_unservable():
    plan = _plan([5.0, 98.0], [0, 1])
    dispatch = plan.dispatch()
    assert dispatch.served[:, 0].tolist() == pytest.approx([0.0, 100.0])
    assert dispatch.unservable[0, 0] == pytest.approx(3.0)
    np.testing.assert_allclose(dispatch.setpoint, dispatch.served + dispatch.unservable)


def test_all_strings_off_leaves_everything_unservable():
    plan = _plan([1e-6, 2e-6], [0, 0])
    dispatch = plan.dispatch()
    assert np.all(dispatch.served == 0.0)
    np.testing.assert_allclose(dispatch.unservable, plan.p_b)


def test_leak_setpoints_cost_no_inverter_loss_in_the_plant():
    model = StringModel()
    plan = _plan([1e-5, 50.0], [0, 1])
    served = plan.dispatch().served
    assert model.inverter.loss(float(served[0, 0]), Mode.DISCHARGE) == 0.0
    assert model.inverter.loss(float(plan.p_b[0, 0]), Mode.DISCHARGE) == 0.0
    assert model.inverter.loss(float(served[1, 0]), Mode.DISCHARGE) > 1.0


def test_extraction_is_deterministic():
    horizon = _horizon([-130.0, 60.0], [0.4, 0.6], [30.0, 26.0])
    first = extract_solution(build_horizon_model(horizon), bnb_solve(build_horizon_model(horizon)).values)
    second = extract_solution(build_horizon_model(horizon), bnb_solve(build_horizon_model(horizon)).values)
    for name in ("p_b", "p_cell", "p_inv", "p_heat", "p_avail", "soc", "temp_pred", "b_inv", "b_high"):
        np.testing.assert_array_equal(getattr(first, name), getattr(second, name), err_msg=name)
    assert first.objective_values == second.objective_values

def test_heat_curve_is_convex_and_exact_at_breakpoints():
    model = StringModel()
    curve = heat_curve(model, Mode.DISCHARGE, 710.4, 0.24, 1.0)
    assert curve.is_convex()
    exact = electrical_response(model, 100.0, 1.0, Mode.DISCHARGE, 710.4, 0.24).heat
    assert curve(100.0) == pytest.approx(exact)
    assert curve(0.0) == pytest.approx(0.0)


def test_objective_normalization():
    scales = normalize_objectives(_horizon([-100.0] * 4, [0.5]))
    assert scales.base_kwh == pytest.approx(100.0)
    assert 48.0 * scales.factor == pytest.approx(0.12)
    assert not scales.degenerate

    idle = normalize_objectives(_horizon([0.0, 0.0], [0.5]))
    assert idle.degenerate
    assert idle.scales == (1.0, 1.0, 1.0, 1.0)


def test_horizon_input_validation():
    with pytest.raises(HorizonInputError, match="exceeds fleet power"):
        build_horizon_model(_horizon([250.0], [0.5, 0.5]))
    with pytest.raises(HorizonInputError):
        build_horizon_model(_horizon([], [0.5]))
