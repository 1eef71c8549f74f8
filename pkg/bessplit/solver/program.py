"""Sparse linear program container with binaries and prioritised objective stages."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, TextIO

import numpy as np

LinearExpr = dict[int, float]


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    binary: bool = False


@dataclass
class Constraint:
    name: str
    coefs: LinearExpr
    sense: Sense
    rhs: float


@dataclass
class ObjectiveStage:
    priority: int
    label: str
    coefs: LinearExpr
    constant: float = 0.0


@dataclass
class LpData:
    """Dense arrays consumed by the simplex."""

    a: np.ndarray
    senses: tuple[Sense, ...]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c: np.ndarray
    c0: float
    row_names: tuple[str, ...]


class MathProgram:
    def __init__(self, name: str = "program") -> None:
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.stages: list[ObjectiveStage] = []
        self.meta: dict[str, Any] = {}
        self._index: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self.variables)

    def add_variable(self, name: str, lb: float, ub: float, binary: bool = False) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        if binary:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if not (math.isfinite(lb) and math.isfinite(ub)):
            raise ValueError(f"variable {name!r} needs finite bounds")
        if lb > ub:
            raise ValueError(f"variable {name!r} has lb {lb} > ub {ub}")
        self.variables.append(Variable(name, float(lb), float(ub), binary))
        self._index[name] = len(self.variables) - 1
        return self._index[name]

    def index(self, name: str) -> int:
        return self._index[name]

    def has(self, name: str) -> bool:
        return name in self._index

    @property
    def binaries(self) -> list[int]:
        return [j for j, var in enumerate(self.variables) if var.binary]

    def add_constraint(
        self, name: str, coefs: Mapping[int, float], sense: Sense | str, rhs: float
    ) -> None:
        cleaned = {int(j): float(v) for j, v in coefs.items() if v != 0.0}
        for j in cleaned:
            if not 0 <= j < len(self.variables):
                raise ValueError(f"constraint {name!r} references unknown variable {j}")
        self.constraints.append(Constraint(name, cleaned, Sense(sense), float(rhs)))

    def add_stage(
        self, priority: int, label: str, coefs: Mapping[int, float], constant: float = 0.0
    ) -> None:
        if any(stage.priority == priority for stage in self.stages):
            raise ValueError(f"stage with priority {priority} already present")
        merged: LinearExpr = {}
        for j, v in coefs.items():
            merged[int(j)] = merged.get(int(j), 0.0) + float(v)
        self.stages.append(ObjectiveStage(priority, label, merged, constant))
        self.stages.sort(key=lambda stage: -stage.priority)

    def copy(self) -> MathProgram:
        return copy.deepcopy(self)

    def combined_objective(self) -> tuple[LinearExpr, float]:
        coefs: LinearExpr = {}
        constant = 0.0
        for stage in self.stages:
            constant += stage.constant
            for j, v in stage.coefs.items():
                coefs[j] = coefs.get(j, 0.0) + v
        return coefs, constant

    def evaluate(self, coefs: Mapping[int, float], values: np.ndarray, constant: float = 0.0) -> float:
        return constant + sum(v * float(values[j]) for j, v in coefs.items())

    def lp_data(self, objective: Mapping[int, float] | None = None, constant: float = 0.0) -> LpData:
        if objective is None:
            objective, constant = self.combined_objective()
        n = len(self.variables)
        a = np.zeros((len(self.constraints), n))
        for i, row in enumerate(self.constraints):
            for j, v in row.coefs.items():
                a[i, j] = v
        c = np.zeros(n)
        for j, v in objective.items():
            c[j] += v
        return LpData(
            a=a,
            senses=tuple(row.sense for row in self.constraints),
            b=np.array([row.rhs for row in self.constraints], dtype=float),
            lb=np.array([var.lb for var in self.variables], dtype=float),
            ub=np.array([var.ub for var in self.variables], dtype=float),
            c=c,
            c0=constant,
            row_names=tuple(row.name for row in self.constraints),
        )

    def violations(self, values: np.ndarray) -> list[tuple[str, float]]:
        """Positive violations of rows and bounds, worst first."""
        found: list[tuple[str, float]] = []
        for row in self.constraints:
            activity = sum(v * float(values[j]) for j, v in row.coefs.items())
            if row.sense == Sense.LE:
                gap = activity - row.rhs
            elif row.sense == Sense.GE:
                gap = row.rhs - activity
            else:
                gap = abs(activity - row.rhs)
            if gap > 0.0:
                found.append((row.name, gap))
        for j, var in enumerate(self.variables):
            gap = max(var.lb - float(values[j]), float(values[j]) - var.ub)
            if gap > 0.0:
                found.append((var.name, gap))
        found.sort(key=lambda item: -item[1])
        return found

    def dump(self, stream: TextIO) -> None:
        """Plain-text listing: VAR, ROW, STAGE lines in index order, then the summed OBJ line."""
        stream.write(f"# program {self.name} vars={len(self.variables)} rows={len(self.constraints)}\n")
        for j, var in enumerate(self.variables):
            kind = "B" if var.binary else "C"
            stream.write(f"VAR {j} {var.name} {var.lb!r} {var.ub!r} {kind}\n")
        for row in self.constraints:
            terms = " ".join(f"{j}*{v!r}" for j, v in sorted(row.coefs.items()))
            stream.write(f"ROW {row.name} {row.sense.value} {row.rhs!r} : {terms}\n")
        for stage in self.stages:
            terms = " ".join(f"{j}*{v!r}" for j, v in sorted(stage.coefs.items()))
            stream.write(f"STAGE {stage.priority} {stage.label} {stage.constant!r} : {terms}\n")
        coefs, constant = self.combined_objective()
        terms = " ".join(f"{j}*{v!r}" for j, v in sorted(coefs.items()))
        stream.write(f"OBJ {constant!r} : {terms}\n")

