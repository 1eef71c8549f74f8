"""Sequential linearization: re-freeze coefficients on the predicted trajectory until it settles."""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np

from ..metrics import RunMetrics
from ..models import BnbConfig, SlpConfig
from ..plant.ecm import InfeasiblePowerError, Mode, coulomb_update
from ..plant.string_model import deliverable_power, electrical_response
from ..plant.thermal import lumped_step
from ..solver.lexicographic import LexicographicError, solve_lexicographic
from .horizon import (
    DispatchPlan,
    ExtractionError,
    HorizonInput,
    build_horizon_model,
    extract_solution,
    freeze_coefficients,
)

logger = logging.getLogger(__name__)


class SlpError(RuntimeError):
    def __init__(self, iteration: int, message: str) -> None:
        super().__init__(f"SLP iteration {iteration}: {message}")
        self.iteration = iteration


def propagate(
    horizon: HorizonInput, plan: DispatchPlan, clamp_infeasible: bool = True, iteration: int = 0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run the plan through the exact ECM and the lumped thermal recursion.

    Returns ``soc`` and ``temp`` trajectories of shape ``(M, T + 1)`` (column 0 is the
    initial state) and the exact battery heat in kW of shape ``(M, T)``.
    """
    n_strings, n_steps = horizon.n_strings, horizon.n_steps
    soc_traj = np.empty((n_strings, n_steps + 1))
    temp_traj = np.empty((n_strings, n_steps + 1))
    heat = np.zeros((n_strings, n_steps))
    served = plan.served()
    for m, model in enumerate(horizon.strings):
        soc = float(horizon.init_soc[m])
        temp = float(horizon.init_temp[m])
        soc_traj[m, 0], temp_traj[m, 0] = soc, temp
        for t, mode in enumerate(horizon.modes):
            k = float(horizon.frozen_k[m, t])
            r_ohm = model.resistance_at(soc, temp, blend=False)
            ocv_v = model.ocv_at(soc, mode)
            setpoint = min(float(served[m, t]), model.p_nominal)
            try:
                response = electrical_response(model, setpoint, k, mode, ocv_v, r_ohm)
            except InfeasiblePowerError as exc:
                if not clamp_infeasible:
                    raise SlpError(iteration, f"string {m} step {t}: {exc}") from exc
                setpoint = deliverable_power(model, setpoint, k, mode, ocv_v, r_ohm)
                response = electrical_response(model, setpoint, k, mode, ocv_v, r_ohm)
            q = model.electrical.q_nominal
            if mode == Mode.CHARGE:
                soc = coulomb_update(soc, response.current, 0.0, horizon.dt, q).soc
            else:
                soc = coulomb_update(soc, 0.0, response.current, horizon.dt, q).soc
            temp = lumped_step(temp, model.thermal, response.heat * 1000.0, horizon.dt)
            heat[m, t] = response.heat
            soc_traj[m, t + 1], temp_traj[m, t + 1] = soc, temp
    return soc_traj, temp_traj, heat


def slp_solve(
    horizon: HorizonInput,
    cfg: SlpConfig | None = None,
    bnb: BnbConfig | None = None,
    metrics: RunMetrics | None = None,
) -> DispatchPlan:
    """Solve one horizon, iterating the frozen coefficients to a fixed point.

    The coefficients in ``horizon`` serve the first iteration; the step-0 derating
    factors are kept throughout since they preview the plant controller.
    """
    cfg = cfg or SlpConfig()
    horizon.validate()
    n_steps = horizon.n_steps
    soc_traj = np.repeat(horizon.init_soc[:, None], n_steps + 1, axis=1)
    temp_traj = np.repeat(horizon.init_temp[:, None], n_steps + 1, axis=1)
    k_first = horizon.frozen_k[:, 0].copy()
    current = horizon
    plan: DispatchPlan | None = None
    converged = False
    d_soc = d_temp = float("inf")
    iteration = 0
    previous: np.ndarray | None = None

    for iteration in range(1, cfg.max_iters + 1):
        tag = f"[{horizon.label}/it{iteration}]"
        program = build_horizon_model(current)
        try:
            sol = solve_lexicographic(program, horizon.controller.eps1, bnb, previous)
        except LexicographicError as exc:
            raise SlpError(iteration, str(exc)) from exc
        previous = sol.values
        if metrics is not None:
            metrics.record_solve(sol.node_count, sol.lp_count, sol.iterations)
        try:
            plan = extract_solution(program, sol.values)
        except ExtractionError as exc:
            raise SlpError(iteration, str(exc)) from exc
        plan.stage_optima = sol.stage_optima
        plan.stage_values = sol.stage_values
        plan.node_log = sol.node_log

        new_soc, new_temp, heat_exact = propagate(current, plan, cfg.clamp_infeasible, iteration)
        if cfg.damping < 1.0:
            new_soc = cfg.damping * new_soc + (1.0 - cfg.damping) * soc_traj
            new_temp = cfg.damping * new_temp + (1.0 - cfg.damping) * temp_traj
        d_soc = float(np.max(np.abs(new_soc - soc_traj)))
        d_temp = float(np.max(np.abs(new_temp - temp_traj)))
        soc_traj, temp_traj = new_soc, new_temp
        plan.heat_exact = heat_exact
        logger.debug(
            "%s stages=%s nodes=%d dsoc=%.2e dtemp=%.3f", tag, sol.stage_optima, sol.node_count, d_soc, d_temp
        )
        if d_soc < cfg.soc_tol and d_temp < cfg.temp_tol:
            converged = True
            break

        r, v, k = freeze_coefficients(
            horizon.strings, horizon.modes, soc_traj[:, :-1], temp_traj[:, :-1], k_first
        )
        current = replace(
            current, frozen_resistance=r, frozen_ocv=v, frozen_k=k, heat_anchor=plan.p_b.copy()
        )

    assert plan is not None
    if not converged:
        logger.warning(
            "[%s/it%d] SLP not converged: dsoc=%.4f dtemp=%.3f",
            horizon.label, iteration, d_soc, d_temp,
        )
    if metrics is not None:
        metrics.record_slp(iteration, converged)
    plan.slp_iterations = iteration
    plan.converged = converged
    return plan
