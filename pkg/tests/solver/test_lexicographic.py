import numpy as np
import pytest

from bessplit.models import ControllerConfig
from bessplit.plant.string_model import StringModel
from bessplit.sim.cosim import Scenario, run_cosim
from bessplit.solver.bnb import bnb_solve
from bessplit.solver.lexicographic import LexicographicError, solve_lexicographic
from bessplit.solver.program import MathProgram, Sense
from tests.oracles import enumerate_binaries


def _knapsack() -> MathProgram:
    program = MathProgram("knapsack")
    ids = [program.add_variable(name, 0.0, 1.0, binary=True) for name in ("a", "b", "c")]
    program.add_constraint("weight", dict(zip(ids, (4.0, 2.0, 3.0))), Sense.LE, 7.0)
    program.add_stage(1, "value", dict(zip(ids, (-9.0, -5.0, -1.5))))
    return program


def test_two_stages():
    program = MathProgram("lex")
    x = program.add_variable("x", 0.0, 2.0)
    y = program.add_variable("y", 0.0, 2.0)
    program.add_constraint("floor", {x: 1.0, y: 1.0}, Sense.GE, 2.0)
    program.add_stage(2, "x", {x: 1.0})
    program.add_stage(1, "y", {y: 1.0})
    sol = solve_lexicographic(program)
    assert sol.values[0] == pytest.approx(0.0, abs=1e-5)
    assert sol.values[1] == pytest.approx(2.0, abs=1e-5)
    assert sol.stage_optima == pytest.approx((0.0, 2.0), abs=1e-5)
    # the input program stays untouched
    assert len(program.constraints) == 1


def test_single_stage_equals_bnb():
    program = _knapsack()
    assert solve_lexicographic(program).objective == pytest.approx(bnb_solve(program).objective)


def test_start_point_does_not_change_the_optimum():
    program = _knapsack()
    cold = solve_lexicographic(program)
    seeded = solve_lexicographic(program, start=np.array([0.0, 1.0, 1.0]))
    assert seeded.objective == pytest.approx(cold.objective)
    assert seeded.values == pytest.approx(cold.values)


def test_failure_names_stage():
    program = MathProgram("broken")
    x = program.add_variable("x", 0.0, 1.0)
    program.add_constraint("floor", {x: 1.0}, Sense.GE, 2.0)
    program.add_stage(1, "only", {x: 1.0})
    with pytest.raises(LexicographicError) as info:
        solve_lexicographic(program)
    assert info.value.stage == 0
    assert info.value.label == "only"


def test_preserves_higher_stage_on_random_programs():
    rng = np.random.default_rng(5)
    eps1 = 1e-6
    for _ in range(15):
        program = MathProgram("rand-lex")
        bins = [program.add_variable(f"b{i}", 0.0, 1.0, binary=True) for i in range(3)]
        conts = [program.add_variable(f"y{i}", 0.0, 2.0) for i in range(2)]
        program.add_constraint(
            "need", {j: float(rng.uniform(0.5, 1.5)) for j in bins + conts}, Sense.GE, 1.5
        )
        first = {j: float(rng.integers(0, 3)) for j in bins + conts}
        second = {j: float(rng.uniform(-1.0, 1.0)) for j in bins + conts}
        program.add_stage(2, "first", first)
        program.add_stage(1, "second", second)

        sol = solve_lexicographic(program, eps1=eps1)
        best_first = enumerate_binaries(program, first)
        assert sol.stage_optima[0] == pytest.approx(best_first, abs=1e-5)
        assert program.evaluate(first, sol.values) <= best_first + eps1 + 1e-5

        restricted = program.copy()
        restricted.add_constraint("keep", first, Sense.LE, best_first + eps1)
        assert sol.stage_optima[1] == pytest.approx(enumerate_binaries(restricted, second), abs=1e-5)


def test_every_horizon_of_a_run_keeps_higher_stages_within_eps1():
    controller = ControllerConfig()
    demand = np.array([-120.0, -150.0, 90.0, 40.0, -60.0, 180.0])
    scenario = Scenario(
        strings=(StringModel(),) * 2,
        initial_soc=(0.3, 0.8),
        initial_temp=(25.0, 40.0),
        demand=demand,
        horizon_steps=2,
        apply_steps=2,
        duration_steps=demand.size,
        controller=controller,
    )
    trace = run_cosim(scenario)
    assert len(trace.horizons) == 3
    for record in trace.horizons:
        assert len(record.stage_values) == len(record.stage_optima) >= 2
        for p in range(len(record.stage_optima) - 1):
            assert record.stage_values[p] <= record.stage_optima[p] + controller.eps1 + 1e-7, (
                record.index, p,
            )
        assert record.stage_values[-1] == pytest.approx(record.stage_optima[-1], abs=1e-6)
