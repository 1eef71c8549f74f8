"""Piecewise-linear lookup tables shared by the plant models and the MILP encoder."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class PwlError(ValueError):
    """Raised for malformed breakpoint sets or table files."""


@dataclass(frozen=True)
class Segment:
    slope: float
    intercept: float
    x_lo: float
    x_hi: float

    def __call__(self, x: float) -> float:
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class PwlTable:
    """Ordered breakpoints with clamp extrapolation outside ``[x_min, x_max]``."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.xs) != len(self.ys):
            raise PwlError("breakpoint x and y lengths differ")
        if len(self.xs) < 2:
            raise PwlError(f"a table needs at least 2 breakpoints, got {len(self.xs)}")
        for left, right in zip(self.xs, self.xs[1:]):
            if right == left:
                raise PwlError(f"duplicate breakpoint x={left!r}")
            if right < left:
                raise PwlError("breakpoints must be sorted by x")
        if not all(np.isfinite(self.xs)) or not all(np.isfinite(self.ys)):
            raise PwlError("breakpoints must be finite")

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.xs, self.ys))

    @property
    def x_min(self) -> float:
        return self.xs[0]

    @property
    def x_max(self) -> float:
        return self.xs[-1]

    def __call__(self, x: float) -> float:
        return pwl_eval(self, x)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.xs, self.ys)

    def scaled(self, factor: float) -> PwlTable:
        return PwlTable(self.xs, tuple(y * factor for y in self.ys))

    def shifted(self, offset: float) -> PwlTable:
        return PwlTable(self.xs, tuple(y + offset for y in self.ys))

    def is_non_increasing(self) -> bool:
        return all(b <= a for a, b in zip(self.ys, self.ys[1:]))

    def is_strictly_increasing(self) -> bool:
        return all(b > a for a, b in zip(self.ys, self.ys[1:]))

    def is_convex(self, tol: float = 1e-12) -> bool:
        slopes = [seg.slope for seg in pwl_segments(self)]
        return all(b >= a - tol * max(1.0, abs(a)) for a, b in zip(slopes, slopes[1:]))


def pwl_build(points: Iterable[Sequence[float]]) -> PwlTable:
    pairs = [(float(x), float(y)) for x, y in points]
    if len(pairs) < 2:
        raise PwlError(f"a table needs at least 2 breakpoints, got {len(pairs)}")
    pairs.sort(key=lambda item: item[0])
    for (x0, _), (x1, _) in zip(pairs, pairs[1:]):
        if x0 == x1:
            raise PwlError(f"duplicate breakpoint x={x0!r}")
    return PwlTable(tuple(x for x, _ in pairs), tuple(y for _, y in pairs))


def pwl_eval(table: PwlTable, x: float) -> float:
    return float(np.interp(float(x), table.xs, table.ys))


def pwl_segments(table: PwlTable) -> list[Segment]:
    segments: list[Segment] = []
    for (x0, y0), (x1, y1) in zip(table.points, table.points[1:]):
        slope = (y1 - y0) / (x1 - x0)
        segments.append(Segment(slope=slope, intercept=y0 - slope * x0, x_lo=x0, x_hi=x1))
    return segments


def convex_minorant(points: Sequence[tuple[float, float]]) -> PwlTable:
    """Lower convex hull of sampled points (x sorted ascending)."""
    table = pwl_build(points)
    hull: list[tuple[float, float]] = []
    for point in table.points:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            cross = (x1 - x0) * (point[1] - y0) - (y1 - y0) * (point[0] - x0)
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(point)
    return PwlTable(tuple(x for x, _ in hull), tuple(y for _, y in hull))


def load_table_csv(path: Path) -> PwlTable:
    """Read a two-column ``x,y`` file; a non-numeric first row is taken as header."""
    path = Path(path)
    if not path.is_file():
        raise PwlError(f"{path}: file does not exist")
    points: list[tuple[float, float]] = []
    first_row = True
    with path.open(newline="") as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 2:
                raise PwlError(f"{path}:{line_no}: expected two columns, got {len(row)}")
            try:
                points.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                if first_row:
                    first_row = False
                    continue
                raise PwlError(f"{path}:{line_no}: non-numeric value in {row!r}") from exc
            first_row = False
    try:
        return pwl_build(points)
    except PwlError as exc:
        raise PwlError(f"{path}: {exc}") from exc
