"""CSV/JSON artifact writers. Every file opens with a versioned schema header."""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .. import __version__
from ..models import KpiReport, RunManifest, SweepOutcome
from ..sim.trace import TRACE_COLUMNS, TraceLog
from .kpi import KPI_FIELDS

HORIZON_COLUMNS = (
    "index",
    "t0",
    "steps",
    "applied_steps",
    "slp_iterations",
    "converged",
    "truncated",
    "stage_optima",
    "stage_values",
)
NODE_COLUMNS = ("horizon", "node_id", "parent", "depth", "bound", "incumbent", "status")
PARETO_COLUMNS = ("label", "w3", "w4", *KPI_FIELDS, "degenerate", "error")
RADAR_COLUMNS = ("label", *KPI_FIELDS)


def make_manifest(
    command: str,
    output_dir: Path,
    config_sha256: str,
    config_path: Path | None = None,
    seed: int | None = None,
) -> RunManifest:
    return RunManifest(
        command=command,
        config_path=str(config_path) if config_path is not None else None,
        output_dir=str(output_dir),
        seed=seed,
        version=__version__,
        config_sha256=config_sha256,
        generated_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def _write_csv(
    path: Path, schema: str, manifest: RunManifest, header: Sequence[str], rows: Iterable[Sequence]
) -> Path:
    with path.open("w", newline="") as handle:
        handle.write(
            f"# bessplit {manifest.version} schema={schema}/v1 config_sha256={manifest.config_sha256}\n"
        )
        handle.write(f"# generated_at={manifest.generated_at}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _write_json(path: Path, manifest: RunManifest, payload: dict) -> Path:
    document = {"manifest": manifest.model_dump(), **payload}
    path.write_text(json.dumps(document, indent=2, sort_keys=False) + "\n")
    return path


def _floats(values: Sequence[float]) -> str:
    return ";".join(repr(float(v)) for v in values)


def write_trace_csv(path: Path, trace: TraceLog, manifest: RunManifest) -> Path:
    n_nodes = max((len(r.temps) for r in trace.rows), default=0)
    header = (*TRACE_COLUMNS, *(f"node_temp_{i}" for i in range(n_nodes)))
    rows = (
        [getattr(row, name) for name in TRACE_COLUMNS] + list(row.temps)
        for row in trace.rows
    )
    return _write_csv(path, "trace", manifest, header, rows)


def write_horizons_csv(path: Path, trace: TraceLog, manifest: RunManifest) -> Path:
    rows = (
        [
            h.index,
            h.t0,
            h.steps,
            h.applied_steps,
            h.slp_iterations,
            int(h.converged),
            int(h.truncated),
            _floats(h.stage_optima),
            _floats(h.stage_values),
        ]
        for h in trace.horizons
    )
    return _write_csv(path, "horizons", manifest, HORIZON_COLUMNS, rows)


def write_nodes_csv(path: Path, trace: TraceLog, manifest: RunManifest) -> Path:
    rows = (
        [h.index, n.node_id, n.parent, n.depth, n.bound, n.incumbent, n.status]
        for h in trace.horizons
        for n in h.node_log
    )
    return _write_csv(path, "nodes", manifest, NODE_COLUMNS, rows)


def write_kpis_json(
    path: Path, kpis: KpiReport, trace: TraceLog, manifest: RunManifest
) -> Path:
    payload = {
        "kpis": kpis.model_dump(),
        "horizons": len(trace.horizons),
        "steps": trace.n_steps,
        "unconverged_horizons": [h.index for h in trace.horizons if not h.converged],
    }
    return _write_json(path, manifest, payload)


def write_pareto_csv(path: Path, outcomes: Sequence[SweepOutcome], manifest: RunManifest) -> Path:
    rows = []
    for outcome in outcomes:
        kpis = outcome.kpis
        values = [getattr(kpis, name) if kpis else "" for name in KPI_FIELDS]
        rows.append(
            [outcome.label, outcome.w3, outcome.w4, *values,
             int(kpis.degenerate) if kpis else "", outcome.error or ""]
        )
    return _write_csv(path, "pareto", manifest, PARETO_COLUMNS, rows)


def write_pareto_json(path: Path, outcomes: Sequence[SweepOutcome], manifest: RunManifest) -> Path:
    payload = {
        "points": [
            outcome.model_dump(exclude={"counters"}) for outcome in outcomes
        ],
        "failed": [outcome.label for outcome in outcomes if not outcome.ok],
    }
    return _write_json(path, manifest, payload)


def write_radar_csv(path: Path, table: Sequence[dict], manifest: RunManifest) -> Path:
    rows = ([row.get(name, "") for name in RADAR_COLUMNS] for row in table)
    return _write_csv(path, "radar", manifest, RADAR_COLUMNS, rows)
