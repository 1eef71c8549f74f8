import json
from pathlib import Path

import pytest

from bessplit import cli
from bessplit.reporting import pareto
from bessplit.sim.cosim import CosimError

SMALL = {
    "fleet": {"n_strings": 2},
    "thermal": {"n_nodes": 10, "c_total": 4.0e6},
    "simulation": {"horizon_steps": 2, "duration_steps": 4},
    "demand": {"source": "direct", "values": [0.0, 0.0, 0.0, 0.0]},
}


def _config(tmp_path: Path, payload: dict = SMALL) -> Path:
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(payload))
    return path


def test_simulate_zero_demand_writes_artifacts(tmp_path: Path, capsys):
    demand = tmp_path / "demand.csv"
    demand.write_text("step,kw\n0,0\n1,0\n2,0\n3,0\n")
    out = tmp_path / "out"
    code = cli.main(
        ["simulate", "--config", str(_config(tmp_path)), "--demand", str(demand), "--out", str(out)]
    )
    assert code == 0
    for name in ("trace.csv", "horizons.csv", "kpis.json", "metrics.prom"):
        assert (out / name).exists(), name
    assert not (out / "nodes.csv").exists()
    kpis = json.loads((out / "kpis.json").read_text())["kpis"]
    assert kpis["availability"] == 100.0
    assert kpis["system_eff"] == 100.0
    assert "bsplit_lp_solves_total" in (out / "metrics.prom").read_text()
    assert "[bsplit]" in capsys.readouterr().out


def test_simulate_node_log_and_env_output_dir(tmp_path: Path, monkeypatch):
    out = tmp_path / "from-env"
    monkeypatch.setenv("BSPLIT_OUTPUT_DIR", str(out))
    assert cli.main(["simulate", "--config", str(_config(tmp_path)), "--verbose-solver"]) == 0
    assert (out / "nodes.csv").exists()


def test_simulate_input_errors(tmp_path: Path, capsys):
    demand = tmp_path / "demand.csv"
    demand.write_text("step,kw\n0,0\n1,oops\n")
    code = cli.main(
        ["simulate", "--config", str(_config(tmp_path)), "--demand", str(demand), "--out", str(tmp_path)]
    )
    assert code == 3
    assert "line 3" in capsys.readouterr().out

    assert cli.main(["simulate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 3


def test_missing_input_files_exit_with_input_error(tmp_path: Path, capsys):
    missing = tmp_path / "nope.csv"
    code = cli.main(
        ["simulate", "--config", str(_config(tmp_path)), "--demand", str(missing), "--out", str(tmp_path)]
    )
    assert code == 3
    assert str(missing) in capsys.readouterr().out

    code = cli.main(["pareto", "--config", str(_config(tmp_path)), "--demand", str(missing),
                     "--out", str(tmp_path)])
    assert code == 3

    table = dict(SMALL, inverter={"charge": {"csv": "no-such-table.csv"}})
    code = cli.main(["simulate", "--config", str(_config(tmp_path, table)), "--out", str(tmp_path)])
    assert code == 3
    assert "no-such-table.csv" in capsys.readouterr().out


def test_simulate_solver_failure_exit_code(tmp_path: Path, monkeypatch):
    def broken(scenario, metrics=None):
        raise CosimError(0, "no incumbent")

    monkeypatch.setattr(cli, "run_cosim", broken)
    assert cli.main(["simulate", "--config", str(_config(tmp_path)), "--out", str(tmp_path)]) == 2


def test_pareto_empty_sweep(tmp_path: Path):
    sweep = tmp_path / "sweep.json"
    sweep.write_text("[]")
    code = cli.main(
        ["pareto", "--config", str(_config(tmp_path)), "--sweep", str(sweep), "--out", str(tmp_path)]
    )
    assert code == 3


def test_pareto_with_failing_point(tmp_path: Path, monkeypatch):
    real = pareto.run_cosim

    def flaky(scenario, metrics=None):
        if scenario.label == "S3":
            raise CosimError(1, "stage infeasible")
        return real(scenario, metrics)

    monkeypatch.setattr(pareto, "run_cosim", flaky)
    out = tmp_path / "sweep"
    assert cli.main(["pareto", "--config", str(_config(tmp_path)), "--out", str(out)]) == 2
    document = json.loads((out / "pareto.json").read_text())
    assert document["failed"] == ["S3"]
    assert [p["label"] for p in document["points"]] == ["S1", "S2", "S3"]
    assert len((out / "pareto.csv").read_text().splitlines()) == 6
    assert (out / "radar.csv").exists()


def test_calibrate_gates(tmp_path: Path, capsys):
    assert cli.main(["calibrate", "--config", str(_config(tmp_path))]) == 0
    assert "sensitivity" in capsys.readouterr().out

    small_capacity = dict(SMALL, thermal={"c_total": 4.0e5})
    assert cli.main(["calibrate", "--config", str(_config(tmp_path, small_capacity))]) == 4

    no_thermal = {key: value for key, value in SMALL.items() if key != "thermal"}
    assert cli.main(["calibrate", "--config", str(_config(tmp_path, no_thermal))]) == 3


def test_unknown_subcommand_exits():
    with pytest.raises(SystemExit):
        cli.main(["optimise"])


def test_pareto_output_does_not_depend_on_worker_count(tmp_path: Path):
    payload = dict(SMALL, demand={"source": "direct", "values": [-80.0, -120.0, 60.0, 30.0]})
    config = _config(tmp_path, payload)
    tables = []
    for workers in (1, 2):
        out = tmp_path / f"workers-{workers}"
        code = cli.main(["pareto", "--config", str(config), "--workers", str(workers), "--out", str(out)])
        assert code == 0
        lines = (out / "pareto.csv").read_text().splitlines()
        tables.append([line for line in lines if not line.startswith("# generated_at=")])
    assert tables[0] == tables[1]
    assert len(tables[0]) == 5
