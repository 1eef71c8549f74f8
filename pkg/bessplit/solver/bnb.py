"""Best-bound branch and bound over the binary variables of a MathProgram."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from typing import Mapping

import numpy as np

from ..models import BnbConfig
from .program import MathProgram, Sense
from .simplex import LpSolution, LpStatus, NodeRecord, WarmStart, simplex

logger = logging.getLogger(__name__)

ABS_GAP_FLOOR = 1e-9


def _most_fractional(values: np.ndarray, tol: float) -> int:
    """Position of the value closest to 0.5, lowest position on ties; -1 when all integral."""
    if values.size == 0:
        return -1
    frac = np.abs(values - np.round(values))
    if frac.max() <= tol:
        return -1
    return int(np.argmax(frac))


class _Search:
    def __init__(self, program: MathProgram, cfg: BnbConfig, objective, constant: float) -> None:
        self.cfg = cfg
        self.data = program.lp_data(objective, constant)
        self.binaries = np.array(program.binaries, dtype=int)
        self.ids = itertools.count()
        self.heap: list[tuple[float, int, int, int, np.ndarray, np.ndarray, LpSolution]] = []
        self.incumbent: LpSolution | None = None
        self.pruned_floor = math.inf
        self.nodes = 0
        self.lp_count = 0
        self.iterations = 0
        self.log: list[NodeRecord] | None = [] if cfg.log_nodes else None

    @property
    def best(self) -> float:
        return self.incumbent.objective if self.incumbent is not None else math.inf

    def _threshold(self) -> float:
        best = self.best
        if not math.isfinite(best):
            return math.inf
        return best - max(self.cfg.gap_tol * abs(best), ABS_GAP_FLOOR)

    def _record(self, node_id: int, parent: int, depth: int, bound: float, status: str) -> None:
        if self.log is not None:
            self.log.append(NodeRecord(node_id, parent, depth, bound, self.best, status))

    def _solve(self, lb: np.ndarray, ub: np.ndarray, warm: WarmStart | None = None) -> LpSolution:
        sol = simplex(self.data, lb, ub, self.cfg.max_lp_iterations, warm)
        self.lp_count += 1
        self.iterations += sol.iterations
        return sol

    def visit(
        self, lb: np.ndarray, ub: np.ndarray, parent: int, depth: int, warm: WarmStart | None = None
    ) -> LpSolution:
        """Solve a freshly created node and file it as incumbent, open or pruned."""
        node_id = next(self.ids)
        self.nodes += 1
        sol = self._solve(lb, ub, warm)
        if sol.status == LpStatus.ITERATION_LIMIT:
            logger.warning("[bnb] node %d hit the LP iteration limit; dropped", node_id)
            self._record(node_id, parent, depth, math.nan, "iteration_limit")
            return sol
        if sol.status != LpStatus.OPTIMAL:
            self._record(node_id, parent, depth, math.nan, sol.status.value)
            return sol
        bound = sol.objective
        if bound >= self._threshold():
            if bound < self.best:
                self.pruned_floor = min(self.pruned_floor, bound)
            self._record(node_id, parent, depth, bound, "pruned")
            return sol
        if _most_fractional(sol.values[self.binaries], self.cfg.integrality_tol) < 0:
            self.incumbent = sol
            self._record(node_id, parent, depth, bound, "incumbent")
        else:
            heapq.heappush(self.heap, (bound, -depth, node_id, parent, lb, ub, sol))
            self._record(node_id, parent, depth, bound, "open")
        return sol

    def seed(self, values: np.ndarray, tol: float = 1e-7) -> bool:
        """Adopt ``values`` as the first incumbent when it is integral and feasible."""
        data = self.data
        x = np.asarray(values, dtype=float)
        if x.shape != data.lb.shape or np.any(x < data.lb - tol) or np.any(x > data.ub + tol):
            return False
        if _most_fractional(x[self.binaries], self.cfg.integrality_tol) >= 0:
            return False
        activity = data.a @ x if data.a.size else np.zeros(0)
        scale = tol * (1.0 + np.abs(data.b))
        for i, sense in enumerate(data.senses):
            gap = activity[i] - data.b[i]
            if (sense == Sense.LE and gap > scale[i]) or (sense == Sense.GE and -gap > scale[i]) or (
                sense == Sense.EQ and abs(gap) > scale[i]
            ):
                return False
        objective = float(data.c @ x) + data.c0
        self.incumbent = LpSolution(LpStatus.OPTIMAL, objective, x.copy())
        return True

    def run(self) -> LpSolution:
        root = self.visit(self.data.lb.copy(), self.data.ub.copy(), -1, 0)
        if root.status in (LpStatus.UNBOUNDED, LpStatus.ITERATION_LIMIT):
            return self._finish(root.status, root)

        node_limited = False
        while self.heap:
            bound, neg_depth, node_id, _, lb, ub, sol = heapq.heappop(self.heap)
            if bound >= self._threshold():
                if bound < self.best:
                    self.pruned_floor = min(self.pruned_floor, bound)
                continue
            if self.nodes >= self.cfg.max_nodes:
                heapq.heappush(self.heap, (bound, neg_depth, node_id, -1, lb, ub, sol))
                node_limited = True
                break
            pos = _most_fractional(sol.values[self.binaries], self.cfg.integrality_tol)
            j = int(self.binaries[pos])
            for value in (1.0, 0.0):
                child_lb, child_ub = lb.copy(), ub.copy()
                child_lb[j] = child_ub[j] = value
                self.visit(child_lb, child_ub, node_id, -neg_depth + 1, sol.warm)

        if node_limited:
            logger.warning(
                "[bnb] node budget of %d exhausted with %d open nodes", self.cfg.max_nodes, len(self.heap)
            )
            return self._finish(LpStatus.NODE_LIMIT, root)
        if self.incumbent is None:
            return self._finish(LpStatus.INFEASIBLE, root)
        return self._finish(LpStatus.OPTIMAL, root)

    def _polish(self, sol: LpSolution) -> LpSolution:
        """Re-solve with the binaries fixed at their rounded values."""
        lb, ub = self.data.lb.copy(), self.data.ub.copy()
        fixed = np.round(sol.values[self.binaries])
        lb[self.binaries] = fixed
        ub[self.binaries] = fixed
        polished = self._solve(lb, ub, sol.warm)
        if polished.status != LpStatus.OPTIMAL or polished.objective > sol.objective + 1e-9 * (
            1.0 + abs(sol.objective)
        ):
            values = sol.values.copy()
            values[self.binaries] = fixed
            return LpSolution(LpStatus.OPTIMAL, sol.objective, values, duals=sol.duals)
        return polished

    def _finish(self, status: LpStatus, root: LpSolution) -> LpSolution:
        open_bound = min((item[0] for item in self.heap), default=math.inf)
        if self.incumbent is not None:
            best = self._polish(self.incumbent)
            objective = best.objective
            bound = min(objective, open_bound, self.pruned_floor)
            gap = max(0.0, objective - bound) / max(abs(objective), ABS_GAP_FLOOR)
            values, duals = best.values, best.duals
        else:
            objective = math.nan
            bound = open_bound if status == LpStatus.NODE_LIMIT else math.inf
            gap = math.inf
            values, duals = root.values, None
        logger.debug(
            "[bnb] status=%s nodes=%d lps=%d obj=%.6g bound=%.6g gap=%.2e",
            status.value, self.nodes, self.lp_count, objective, bound, gap,
        )
        return LpSolution(
            status=status,
            objective=objective,
            values=values,
            duals=duals,
            iterations=self.iterations,
            bound=bound,
            gap=gap,
            node_count=self.nodes,
            lp_count=self.lp_count,
            node_log=self.log,
        )


def bnb_solve(
    program: MathProgram,
    cfg: BnbConfig | None = None,
    objective: Mapping[int, float] | None = None,
    constant: float = 0.0,
    start: np.ndarray | None = None,
) -> LpSolution:
    """Minimise ``objective`` (default: all stages summed) with integral binaries.

    Children of a branched node are solved when created, the up branch first, and
    queued by (bound, deeper first, creation order). Branching picks the most
    fractional binary with ties going to the lowest variable index.
    ``start`` is a known solution used as the first incumbent when it is feasible.
    """
    search = _Search(program, cfg or BnbConfig(), objective, constant)
    if start is not None and not search.seed(start):
        logger.debug("[bnb] start point rejected for %s", program.name)
    return search.run()
