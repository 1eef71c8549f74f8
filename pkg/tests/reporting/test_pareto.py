import time
from pathlib import Path

import numpy as np
import pytest

from bessplit.models import DEFAULT_SWEEP, SweepPoint
from bessplit.plant.string_model import StringModel
from bessplit.reporting import artifacts, pareto
from bessplit.reporting.kpi import compute_kpis
from bessplit.sim.cosim import CosimError, Scenario, run_cosim


def _scenario(demand) -> Scenario:
    demand = np.asarray(demand, dtype=float)
    return Scenario(
        strings=(StringModel(),) * 2,
        initial_soc=(0.5, 0.5),
        initial_temp=(25.0, 25.0),
        demand=demand,
        horizon_steps=2,
        apply_steps=2,
        duration_steps=demand.size,
    )


def test_sweep_scenario_sets_loss_weights():
    scenario = pareto.sweep_scenario(_scenario(np.zeros(2)), SweepPoint(label="S2", w3=0.5, w4=0.5))
    assert scenario.controller.weights == (1.0, 1.0, 0.5, 0.5)
    assert scenario.label == "S2"


@pytest.mark.asyncio
async def test_async_sweep_orders_by_label():
    points = [SweepPoint(label=p.label, w3=p.w3, w4=p.w4) for p in reversed(DEFAULT_SWEEP)]
    outcomes = await pareto.pareto_sweep_async(_scenario(np.zeros(2)), points)
    assert [o.label for o in outcomes] == ["S1", "S2", "S3"]
    assert all(o.ok and o.kpis.degenerate for o in outcomes)
    assert all(o.counters["lp_solves"] > 0 for o in outcomes)


def test_single_point_sweep_matches_direct_run():
    base = _scenario([-60.0, -30.0])
    point = SweepPoint(label="S1", w3=1.0, w4=0.0)
    (outcome,) = pareto.pareto_sweep(base, [point])
    direct = compute_kpis(run_cosim(pareto.sweep_scenario(base, point)))
    assert outcome.kpis == direct


def test_empty_or_duplicate_sweeps_rejected():
    with pytest.raises(ValueError):
        pareto.pareto_sweep(_scenario(np.zeros(2)), [])
    twice = [SweepPoint(label="A", w3=1.0, w4=0.0), SweepPoint(label="A", w3=0.0, w4=1.0)]
    with pytest.raises(ValueError, match="duplicate"):
        pareto.pareto_sweep(_scenario(np.zeros(2)), twice)


def test_failing_point_is_reported(monkeypatch, tmp_path: Path):
    real = pareto.run_cosim

    def flaky(scenario, metrics=None):
        if scenario.label == "S2":
            raise CosimError(0, "solver gave up")
        return real(scenario, metrics)

    monkeypatch.setattr(pareto, "run_cosim", flaky)
    outcomes = pareto.pareto_sweep(_scenario(np.zeros(2)), DEFAULT_SWEEP)
    assert [o.ok for o in outcomes] == [True, False, True]
    assert "solver gave up" in outcomes[1].error

    manifest = artifacts.make_manifest("pareto", tmp_path, "abc123")
    artifacts.write_pareto_csv(tmp_path / "pareto.csv", outcomes, manifest)
    lines = (tmp_path / "pareto.csv").read_text().splitlines()
    assert lines[0].startswith("# bessplit ") and "schema=pareto/v1" in lines[0]
    assert "config_sha256=abc123" in lines[0]
    assert lines[1].startswith("# generated_at=")
    assert lines[2].split(",")[:3] == ["label", "w3", "w4"]
    assert len(lines) == 6


@pytest.mark.slow
def test_default_sweep_trades_inverter_for_battery_loss():
    demand = np.concatenate([np.full(8, 90.0), np.full(8, -90.0)])
    start = time.perf_counter()
    outcomes = pareto.pareto_sweep(_scenario(demand), DEFAULT_SWEEP)
    assert time.perf_counter() - start < 900.0
    by_label = {o.label: o.kpis for o in outcomes}
    assert by_label["S1"].inverter_eff >= by_label["S2"].inverter_eff - 1e-6
    assert by_label["S2"].inverter_eff >= by_label["S3"].inverter_eff - 1e-6
    assert by_label["S3"].battery_eff >= by_label["S2"].battery_eff - 1e-6
    assert by_label["S2"].battery_eff >= by_label["S1"].battery_eff - 1e-6

    system = {label: kpis.system_eff for label, kpis in by_label.items()}
    assert system["S2"] >= max(system.values()) - 1e-3
    peak = {label: kpis.peak_mean_temp for label, kpis in by_label.items()}
    assert peak["S1"] == max(peak.values())
    assert peak["S1"] >= peak["S3"] + 2.0
