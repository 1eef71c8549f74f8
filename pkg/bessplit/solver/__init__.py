from .bnb import bnb_solve
from .lexicographic import LexicographicError, solve_lexicographic
from .program import Constraint, LinearExpr, LpData, MathProgram, ObjectiveStage, Sense, Variable
from .simplex import LpSolution, LpStatus, NodeRecord, WarmStart, lp_solve, simplex

__all__ = [
    "Constraint",
    "LexicographicError",
    "LinearExpr",
    "LpData",
    "LpSolution",
    "LpStatus",
    "MathProgram",
    "NodeRecord",
    "ObjectiveStage",
    "Sense",
    "Variable",
    "WarmStart",
    "bnb_solve",
    "lp_solve",
    "simplex",
    "solve_lexicographic",
]
