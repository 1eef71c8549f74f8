from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from ..solver.simplex import NodeRecord


@dataclass(frozen=True)
class TraceRow:
    """One string over one applied step. Powers in kW."""

    step: int
    string: int
    mode: str
    demand: float
    setpoint: float
    served: float
    applied: float
    p_inv: float
    p_heat: float
    p_derate: float
    p_avail: float
    p_overflow: float
    p_dc: float
    p_stored: float
    current: float
    soc: float
    temp_mean: float
    k_derate: float
    b_high: int
    b_low: int
    b_inv: int
    temps: tuple[float, ...] = field(default=())


TRACE_COLUMNS = tuple(f.name for f in fields(TraceRow) if f.name != "temps")


@dataclass(frozen=True)
class HorizonRecord:
    index: int
    t0: int
    steps: int
    applied_steps: int
    init_soc: tuple[float, ...]
    init_temp: tuple[float, ...]
    slp_iterations: int
    converged: bool
    stage_optima: tuple[float, ...]
    stage_values: tuple[float, ...]
    wall_time: float
    truncated: bool = False
    node_log: tuple[NodeRecord, ...] = field(default=(), repr=False)


@dataclass
class TraceLog:
    n_strings: int
    dt: float
    rows: list[TraceRow] = field(default_factory=list)
    horizons: list[HorizonRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def n_steps(self) -> int:
        return len(self.rows) // self.n_strings if self.n_strings else 0

    def column(self, name: str, string: int | None = None) -> np.ndarray:
        rows = self.rows if string is None else [r for r in self.rows if r.string == string]
        return np.array([getattr(r, name) for r in rows], dtype=float)

    def matrix(self, name: str) -> np.ndarray:
        """``(n_strings, n_steps)`` view of a numeric column."""
        out = np.zeros((self.n_strings, self.n_steps))
        for row in self.rows:
            out[row.string, row.step] = getattr(row, name)
        return out

    def fleet_demand(self) -> np.ndarray:
        """Signed fleet demand per step."""
        return np.array([r.demand for r in self.rows if r.string == 0], dtype=float)
