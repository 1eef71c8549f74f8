import json
from pathlib import Path

import numpy as np

from bessplit.models import BnbConfig
from bessplit.plant.string_model import StringModel
from bessplit.reporting import artifacts
from bessplit.reporting.kpi import compute_kpis
from bessplit.sim.cosim import Scenario, run_cosim


def _trace(log_nodes: bool = False):
    scenario = Scenario(
        strings=(StringModel(),) * 2,
        initial_soc=(0.5, 0.5),
        initial_temp=(25.0, 25.0),
        demand=np.array([-50.0, 30.0]),
        horizon_steps=2,
        apply_steps=2,
        duration_steps=2,
        bnb=BnbConfig(log_nodes=log_nodes),
    )
    return run_cosim(scenario)


def test_trace_and_horizon_files(tmp_path: Path):
    trace = _trace(log_nodes=True)
    manifest = artifacts.make_manifest("simulate", tmp_path, "f00d", seed=4)

    artifacts.write_trace_csv(tmp_path / "trace.csv", trace, manifest)
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert "schema=trace/v1" in lines[0]
    header = lines[2].split(",")
    assert header[:3] == ["step", "string", "mode"]
    assert header[-1] == "node_temp_9"
    assert len(lines) == 3 + 4

    artifacts.write_horizons_csv(tmp_path / "horizons.csv", trace, manifest)
    horizons = (tmp_path / "horizons.csv").read_text().splitlines()
    assert horizons[2].split(",") == list(artifacts.HORIZON_COLUMNS)
    assert len(horizons) == 4

    artifacts.write_nodes_csv(tmp_path / "nodes.csv", trace, manifest)
    nodes = (tmp_path / "nodes.csv").read_text().splitlines()
    assert len(nodes) > 3


def test_kpis_json_carries_manifest(tmp_path: Path):
    trace = _trace()
    manifest = artifacts.make_manifest("simulate", tmp_path, "f00d")
    artifacts.write_kpis_json(tmp_path / "kpis.json", compute_kpis(trace), trace, manifest)
    document = json.loads((tmp_path / "kpis.json").read_text())
    assert document["manifest"]["command"] == "simulate"
    assert document["manifest"]["config_sha256"] == "f00d"
    assert document["steps"] == 2
    assert set(document["kpis"]) >= {"availability", "system_eff", "degenerate"}
