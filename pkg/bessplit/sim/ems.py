"""Energy-management side of the loop: demand profiles and rolling horizon windows."""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

LOW_PRICE = 30.0
HIGH_PRICE = 90.0


class DemandError(ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def load_profile_csv(path: Path) -> np.ndarray:
    """Read ``(step or timestamp, value)`` rows; the value column is returned in file order.

    A non-numeric first data row is a header. Blank rows and ``#`` comments are skipped.
    """
    path = Path(path)
    if not path.is_file():
        raise DemandError(f"{path}: file does not exist")
    values: list[float] = []
    first_row = True
    with path.open(newline="") as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            cell = row[-1] if len(row) >= 2 else None
            if cell is None:
                raise DemandError(f"{path}: expected two columns, got {len(row)}", line_no)
            try:
                value = float(cell)
            except ValueError as exc:
                if first_row:
                    first_row = False
                    continue
                raise DemandError(f"{path}: non-numeric value {cell!r}", line_no) from exc
            if not np.isfinite(value):
                raise DemandError(f"{path}: non-finite value {cell!r}", line_no)
            first_row = False
            values.append(value)
    if not values:
        raise DemandError(f"{path}: no data rows")
    return np.asarray(values, dtype=float)


def two_level_prices(steps: int, block_steps: int = 8) -> np.ndarray:
    """Alternating low/high price blocks, starting low."""
    blocks = (np.arange(steps) // block_steps) % 2
    return np.where(blocks == 0, LOW_PRICE, HIGH_PRICE)


def price_arbitrage(
    prices: Sequence[float], power_kw: float, jitter: float = 0.0, seed: int | None = None
) -> np.ndarray:
    """Charge at ``power_kw`` at or below the lower quartile, discharge at or above the upper.

    Quartiles are taken once over the whole profile; steps meeting both tests stay idle.
    """
    p = np.asarray(prices, dtype=float)
    if p.size == 0:
        raise DemandError("empty price profile")
    if jitter > 0.0:
        p = p + np.random.default_rng(seed).normal(0.0, jitter, size=p.shape)
    low, high = np.quantile(p, 0.25), np.quantile(p, 0.75)
    charge = p <= low
    discharge = p >= high
    demand = np.zeros_like(p)
    demand[charge & ~discharge] = power_kw
    demand[discharge & ~charge] = -power_kw
    logger.debug("Price rule: q25=%.3f q75=%.3f charge=%d discharge=%d", low, high,
                 int(np.sum(charge & ~discharge)), int(np.sum(discharge & ~charge)))
    return demand


def ems_horizon(profile: np.ndarray, t0: int, steps: int) -> tuple[np.ndarray, bool]:
    """Demand window ``[t0, t0 + steps)``; the flag reports a window cut at the profile end."""
    if t0 < 0 or steps < 1:
        raise ValueError("t0 must be >= 0 and steps >= 1")
    window = np.asarray(profile[t0:t0 + steps], dtype=float)
    truncated = window.shape[0] < steps
    if truncated:
        logger.debug("Horizon at step %d truncated to %d of %d steps", t0, window.shape[0], steps)
    return window, truncated
