"""Bounded-variable primal simplex (revised form, explicit basis inverse).

Every row ``i`` gets a logical column ``s_i`` with ``A x + s = b``:
``<=`` rows bound ``s`` to ``[0, inf)``, ``=`` rows to ``[0, 0]`` and ``>=`` rows
to ``(-inf, 0]``. Rows whose logical cannot absorb the starting residual get a
signed artificial column that phase 1 drives to zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .program import LpData, MathProgram, Sense

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
OPTIMALITY_TOL = 1e-9
BOUND_TOL = 1e-12
FEASIBILITY_TOL = 1e-9
INFEASIBILITY_PROOF_TOL = 1e-7
DUAL_PIVOTS_PER_ROW = 5
RATIO_TIE_TOL = 1e-12
REFACTOR_EVERY = 64
STALL_LIMIT = 50
DEFAULT_MAX_ITER = 50_000


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NODE_LIMIT = "node_limit"


@dataclass
class NodeRecord:
    node_id: int
    parent: int
    depth: int
    bound: float
    incumbent: float
    status: str


@dataclass(frozen=True, eq=False)
class WarmStart:
    """Final basis of a solved LP, reusable after bound changes on the same rows.

    ``frame`` is the full column matrix ``[A | I | artificials]`` the basis indexes into.
    """

    frame: np.ndarray
    art_rows: np.ndarray
    basis: np.ndarray
    x: np.ndarray


@dataclass
class LpSolution:
    status: LpStatus
    objective: float
    values: np.ndarray
    duals: np.ndarray | None = None
    iterations: int = 0
    bound: float = float("nan")
    gap: float = 0.0
    node_count: int = 0
    lp_count: int = 1
    stage_optima: tuple[float, ...] = ()
    stage_values: tuple[float, ...] = ()
    node_log: list[NodeRecord] | None = field(default=None, repr=False)
    warm: WarmStart | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == LpStatus.OPTIMAL


def _pivot_col(
    d: np.ndarray, x: np.ndarray, lo: np.ndarray, hi: np.ndarray, basic: np.ndarray, bland: bool
) -> int:
    """Entering column: largest reduced cost that can improve (Dantzig) or the first (Bland)."""
    can_up = (d < -OPTIMALITY_TOL) & (x < hi - BOUND_TOL)
    can_down = (d > OPTIMALITY_TOL) & (x > lo + BOUND_TOL)
    eligible = (can_up | can_down) & ~basic
    if not eligible.any():
        return -1
    if bland:
        return int(np.flatnonzero(eligible)[0])
    return int(np.argmax(np.where(eligible, np.abs(d), 0.0)))


def _pivot_row(
    delta: np.ndarray,
    x_b: np.ndarray,
    lo_b: np.ndarray,
    hi_b: np.ndarray,
    basis: np.ndarray,
    bland: bool,
) -> tuple[int, float]:
    """Ratio test on the basic variables moving at rate ``delta`` per unit step."""
    ratios = np.full(delta.shape, np.inf)
    dec = delta < -PIVOT_TOL
    inc = delta > PIVOT_TOL
    with np.errstate(invalid="ignore", over="ignore"):
        ratios[dec] = (x_b[dec] - lo_b[dec]) / -delta[dec]
        ratios[inc] = (hi_b[inc] - x_b[inc]) / delta[inc]
    ratios = np.maximum(ratios, 0.0)
    theta = float(ratios.min()) if ratios.size else np.inf
    if not np.isfinite(theta):
        return -1, np.inf
    ties = np.flatnonzero(ratios <= theta + RATIO_TIE_TOL)
    if bland:
        return int(ties[np.argmin(basis[ties])]), theta
    return int(ties[np.argmax(np.abs(delta[ties]))]), theta


def _apply_pivot(binv: np.ndarray, alpha: np.ndarray, row: int) -> None:
    binv[row] /= alpha[row]
    others = alpha.copy()
    others[row] = 0.0
    binv -= np.outer(others, binv[row])


class _RevisedSimplex:
    def __init__(
        self,
        data: LpData,
        lb: np.ndarray,
        ub: np.ndarray,
        max_iter: int,
        warm: WarmStart | None = None,
    ) -> None:
        a = data.a
        m, n = a.shape
        self.m, self.n = m, n
        self.b = data.b
        self.max_iter = max_iter
        self.iterations = 0
        self.since_refactor = 0

        le = np.array([s == Sense.LE for s in data.senses], dtype=bool)
        ge = np.array([s == Sense.GE for s in data.senses], dtype=bool)
        slack_lo = np.where(ge, -np.inf, 0.0)
        slack_hi = np.where(le, np.inf, 0.0)

        if warm is not None:
            self._resume_from(warm, lb, ub, slack_lo, slack_hi)
            return

        resid = data.b - a @ lb if m else np.zeros(0)
        target = np.clip(resid, slack_lo, slack_hi)
        gap = resid - target
        self.art_rows = np.abs(gap) > 0.0
        sigma = np.where(gap < 0.0, -1.0, 1.0)

        self.lo = np.concatenate([lb, slack_lo, np.zeros(m)])
        self.hi = np.concatenate([ub, slack_hi, np.where(self.art_rows, np.inf, 0.0)])
        self.x = np.concatenate([lb, target, np.abs(gap)])
        self.k = np.hstack([a, np.eye(m), np.diag(sigma)]) if m else np.zeros((0, n))
        self.basis = np.where(self.art_rows, n + m + np.arange(m), n + np.arange(m)).astype(int)
        self.is_basic = np.zeros(n + 2 * m, dtype=bool)
        self.is_basic[self.basis] = True
        self.binv = np.diag(np.where(self.art_rows, sigma, 1.0)) if m else np.zeros((0, 0))

    def _resume_from(
        self, warm: WarmStart, lb: np.ndarray, ub: np.ndarray, slack_lo: np.ndarray, slack_hi: np.ndarray
    ) -> None:
        m = self.m
        self.k = warm.frame
        self.art_rows = warm.art_rows
        self.lo = np.concatenate([lb, slack_lo, np.zeros(m)])
        self.hi = np.concatenate([ub, slack_hi, np.zeros(m)])
        self.basis = warm.basis.copy()
        self.is_basic = np.zeros(self.k.shape[1], dtype=bool)
        self.is_basic[self.basis] = True
        self.x = warm.x.copy()
        nonbasic = ~self.is_basic
        self.x[nonbasic] = np.clip(self.x[nonbasic], self.lo[nonbasic], self.hi[nonbasic])
        self.binv = np.linalg.inv(self.k[:, self.basis]) if m else np.zeros((0, 0))
        self._update_basic_values()

    def _update_basic_values(self) -> None:
        nonbasic = np.where(self.is_basic, 0.0, self.x)
        self.x[self.basis] = self.binv @ (self.b - self.k @ nonbasic)

    def _refactor(self) -> None:
        try:
            self.binv = np.linalg.inv(self.k[:, self.basis])
        except np.linalg.LinAlgError:  # pragma: no cover - basis kept nonsingular by pivoting
            logger.warning("Basis refactorisation failed; keeping product-form inverse")
            return
        self._update_basic_values()
        self.since_refactor = 0

    def _pivot(self, col: int, row: int, alpha: np.ndarray) -> None:
        leaving = self.basis[row]
        self.basis[row] = col
        self.is_basic[leaving] = False
        self.is_basic[col] = True
        _apply_pivot(self.binv, alpha, row)
        self.since_refactor += 1

    def iterate(self, cost: np.ndarray) -> LpStatus:
        bland = False
        stall = 0
        while True:
            if self.iterations >= self.max_iter:
                return LpStatus.ITERATION_LIMIT
            if self.since_refactor >= REFACTOR_EVERY:
                self._refactor()
            y = cost[self.basis] @ self.binv
            d = cost - y @ self.k
            d[self.basis] = 0.0
            col = _pivot_col(d, self.x, self.lo, self.hi, self.is_basic, bland)
            if col < 0:
                self.duals = y
                return LpStatus.OPTIMAL
            direction = 1.0 if d[col] < 0.0 else -1.0
            alpha = self.binv @ self.k[:, col]
            delta = -direction * alpha
            row, theta = _pivot_row(
                delta, self.x[self.basis], self.lo[self.basis], self.hi[self.basis], self.basis, bland
            )
            flip = self.hi[col] - self.lo[col]
            if not np.isfinite(theta) and not np.isfinite(flip):
                return LpStatus.UNBOUNDED
            if flip <= theta:
                step = flip
                self.x[self.basis] += delta * step
                self.x[col] = self.hi[col] if direction > 0 else self.lo[col]
            else:
                step = theta
                self.x[self.basis] += delta * step
                leaving = self.basis[row]
                self.x[leaving] = self.lo[leaving] if delta[row] < 0.0 else self.hi[leaving]
                self.x[col] += direction * step
                self._pivot(col, row, alpha)
            self.iterations += 1
            stall = stall + 1 if step <= BOUND_TOL else 0
            if stall > STALL_LIMIT and not bland:
                logger.debug("Degenerate stall after %d iterations; switching to Bland's rule", self.iterations)
                bland = True

    def restore_feasibility(self, cost: np.ndarray) -> LpStatus:
        """Dual simplex from a dual feasible basis until every basic value is within bounds.

        ``OPTIMAL`` means primal feasible here; ``INFEASIBLE`` is proven by a clearly
        violated row with no eligible entering column. ``ITERATION_LIMIT`` asks the
        caller for a cold solve.
        """
        budget = self.iterations + DUAL_PIVOTS_PER_ROW * (self.m + 1)
        while True:
            if self.iterations >= min(self.max_iter, budget):
                return LpStatus.ITERATION_LIMIT
            if self.since_refactor >= REFACTOR_EVERY:
                self._refactor()
            x_b = self.x[self.basis]
            below = self.lo[self.basis] - x_b
            above = x_b - self.hi[self.basis]
            excess = np.maximum(below, above) - FEASIBILITY_TOL * (1.0 + np.abs(x_b))
            if excess.size == 0 or excess.max() <= 0.0:
                return LpStatus.OPTIMAL
            row = int(np.argmax(excess))
            leaving = int(self.basis[row])
            raise_basic = below[row] > above[row]
            bound = self.lo[leaving] if raise_basic else self.hi[leaving]

            y = cost[self.basis] @ self.binv
            d = cost - y @ self.k
            tableau_row = self.binv[row] @ self.k
            sign = 1.0 if raise_basic else -1.0
            can_rise = self.x < self.hi - BOUND_TOL
            can_fall = self.x > self.lo + BOUND_TOL
            eligible = (
                ((can_rise & (-sign * tableau_row > PIVOT_TOL)) | (can_fall & (sign * tableau_row > PIVOT_TOL)))
                & ~self.is_basic
            )
            if not eligible.any():
                if excess[row] > INFEASIBILITY_PROOF_TOL * (1.0 + abs(x_b[row])):
                    return LpStatus.INFEASIBLE
                return LpStatus.ITERATION_LIMIT
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(eligible, np.abs(d) / np.abs(tableau_row), np.inf)
            col = int(np.argmin(ratios))
            alpha = self.binv @ self.k[:, col]
            if abs(alpha[row]) <= PIVOT_TOL:
                return LpStatus.ITERATION_LIMIT
            step = (self.x[leaving] - bound) / alpha[row]
            self.x[self.basis] -= step * alpha
            self.x[col] += step
            self.x[leaving] = bound
            self._pivot(col, row, alpha)
            self.iterations += 1

    def run(self, c: np.ndarray) -> LpStatus:
        n, m = self.n, self.m
        if self.art_rows.any():
            phase1 = np.zeros(n + 2 * m)
            phase1[n + m:] = np.where(self.art_rows, 1.0, 0.0)
            status = self.iterate(phase1)
            if status != LpStatus.OPTIMAL:
                return status
            self._refactor()
            infeasibility = float(self.x[n + m:].sum())
            if infeasibility > 1e-9 * (1.0 + float(np.abs(self.b).max(initial=0.0))):
                return LpStatus.INFEASIBLE
            self.hi[n + m:] = 0.0
        cost = np.concatenate([c, np.zeros(2 * m)])
        status = self.iterate(cost)
        if status == LpStatus.OPTIMAL:
            self._refactor()
        return status

    def resume(self, c: np.ndarray) -> LpStatus:
        cost = np.concatenate([c, np.zeros(2 * self.m)])
        status = self.restore_feasibility(cost)
        if status != LpStatus.OPTIMAL:
            return status
        status = self.iterate(cost)
        if status == LpStatus.OPTIMAL:
            self._refactor()
        return status

    def warm_start(self) -> WarmStart:
        return WarmStart(frame=self.k, art_rows=self.art_rows, basis=self.basis.copy(), x=self.x.copy())


def _solve_warm(
    data: LpData, lb: np.ndarray, ub: np.ndarray, max_iter: int, warm: WarmStart
) -> tuple[_RevisedSimplex, LpStatus] | None:
    try:
        solver = _RevisedSimplex(data, lb, ub, max_iter, warm)
    except np.linalg.LinAlgError:
        return None
    status = solver.resume(data.c)
    if status not in (LpStatus.OPTIMAL, LpStatus.INFEASIBLE):
        logger.debug("Warm start ended with %s after %d iterations; solving cold", status.value, solver.iterations)
        return None
    return solver, status


def simplex(
    data: LpData,
    lb: np.ndarray | None = None,
    ub: np.ndarray | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    warm: WarmStart | None = None,
) -> LpSolution:
    """Solve ``min c x`` over the rows of ``data`` within ``[lb, ub]``.

    With ``warm`` the LP restarts from that basis by dual simplex and falls back to a
    cold start when the restart stalls.
    """
    lb = data.lb if lb is None else lb
    ub = data.ub if ub is None else ub
    if np.any(lb > ub):
        return LpSolution(LpStatus.INFEASIBLE, float("inf"), lb.copy())
    lb, ub = lb.astype(float), ub.astype(float)
    resumed = _solve_warm(data, lb, ub, max_iter, warm) if warm is not None else None
    if resumed is None:
        solver = _RevisedSimplex(data, lb, ub, max_iter)
        status = solver.run(data.c)
    else:
        solver, status = resumed
    n = data.a.shape[1]
    values = solver.x[:n].copy()
    if status != LpStatus.OPTIMAL:
        return LpSolution(status, float("nan"), values, iterations=solver.iterations)

    values = np.clip(values, lb, ub)
    objective = float(data.c @ values) + data.c0
    if data.a.size:
        activity = data.a @ values
        worst = 0.0
        for i, sense in enumerate(data.senses):
            if sense == Sense.LE:
                gap = activity[i] - data.b[i]
            elif sense == Sense.GE:
                gap = data.b[i] - activity[i]
            else:
                gap = abs(activity[i] - data.b[i])
            worst = max(worst, gap / (1.0 + abs(data.b[i])))
        if worst > 1e-7:
            logger.warning("LP solution violates rows by %.3e (relative)", worst)
    return LpSolution(
        LpStatus.OPTIMAL,
        objective,
        values,
        duals=getattr(solver, "duals", None),
        iterations=solver.iterations,
        bound=objective,
        warm=solver.warm_start(),
    )


def lp_solve(
    program: MathProgram,
    objective: Mapping[int, float] | None = None,
    constant: float = 0.0,
    *,
    lb: np.ndarray | None = None,
    ub: np.ndarray | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
) -> LpSolution:
    """Solve the LP relaxation (binaries in ``[0, 1]``) of ``program``.

    Without an explicit ``objective`` the sum of all objective stages is minimised.
    """
    return simplex(program.lp_data(objective, constant), lb=lb, ub=ub, max_iter=max_iter)
