"""Horizon MILP assembly and the SLP outer loop."""

from __future__ import annotations

from .horizon import (
    DispatchPlan,
    ExtractionError,
    HorizonInput,
    HorizonInputError,
    ObjectiveScales,
    PlantDispatch,
    build_horizon_model,
    extract_solution,
    freeze_coefficients,
    heat_curve,
    heat_samples,
    normalize_objectives,
)
from .slp import SlpError, propagate, slp_solve

__all__ = [
    "DispatchPlan",
    "ExtractionError",
    "HorizonInput",
    "HorizonInputError",
    "ObjectiveScales",
    "PlantDispatch",
    "SlpError",
    "build_horizon_model",
    "extract_solution",
    "freeze_coefficients",
    "heat_curve",
    "heat_samples",
    "normalize_objectives",
    "propagate",
    "slp_solve",
]
