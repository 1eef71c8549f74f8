from __future__ import annotations

import logging
import math

import numpy as np

from ..models import BnbConfig
from .bnb import bnb_solve
from .program import MathProgram, Sense
from .simplex import LpSolution, LpStatus

logger = logging.getLogger(__name__)


class LexicographicError(RuntimeError):
    def __init__(self, stage: int, label: str, status: LpStatus) -> None:
        super().__init__(f"stage {stage} ({label}) failed with status {status.value}")
        self.stage = stage
        self.label = label
        self.status = status


def solve_lexicographic(
    program: MathProgram,
    eps1: float = 1e-6,
    cfg: BnbConfig | None = None,
    start: np.ndarray | None = None,
) -> LpSolution:
    """Solve the objective stages in decreasing priority.

    After stage ``k`` reaches ``F*_k`` the row ``stage_k(x) <= F*_k + eps1`` is added
    before the next stage is solved, and its solution seeds the next search. ``start``
    seeds the first stage. The input program is left untouched.
    """
    if not program.stages:
        raise ValueError(f"program {program.name!r} has no objective stages")
    work = program.copy()
    optima: list[float] = []
    nodes = lps = iterations = 0
    log = None
    sol: LpSolution | None = None

    for k, stage in enumerate(list(work.stages)):
        if sol is not None:
            start = sol.values
        sol = bnb_solve(work, cfg, stage.coefs, stage.constant, start)
        nodes += sol.node_count
        lps += sol.lp_count
        iterations += sol.iterations
        if sol.node_log is not None:
            log = (log or []) + sol.node_log
        usable = sol.status == LpStatus.OPTIMAL or (
            sol.status == LpStatus.NODE_LIMIT and math.isfinite(sol.objective)
        )
        if not usable:
            raise LexicographicError(k, stage.label, sol.status)
        optima.append(sol.objective)
        logger.debug("[lex] stage %d (%s) optimum %.9g after %d nodes", k, stage.label, sol.objective, sol.node_count)
        work.add_constraint(
            f"lex[{stage.priority}]", stage.coefs, Sense.LE, sol.objective + eps1 - stage.constant
        )

    assert sol is not None
    stage_values = tuple(work.evaluate(s.coefs, sol.values, s.constant) for s in work.stages)
    return LpSolution(
        status=sol.status,
        objective=sol.objective,
        values=sol.values,
        duals=sol.duals,
        iterations=iterations,
        bound=sol.bound,
        gap=sol.gap,
        node_count=nodes,
        lp_count=lps,
        stage_optima=tuple(optima),
        stage_values=stage_values,
        node_log=log,
    )
