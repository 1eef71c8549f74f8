"""Assemble one MPC horizon as a staged mixed-integer linear program.

Nonlinear terms (resistance, OCV, derating factor and the heat curve) enter as
coefficients frozen on a state trajectory; the SLP loop refreshes them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..models import ControllerConfig
from ..piecewise import PwlTable, convex_minorant, pwl_segments
from ..plant.ecm import InfeasiblePowerError, Mode
from ..plant.inverter import OFF_THRESHOLD_FRACTION
from ..plant.string_model import StringModel, electrical_response
from ..solver.program import LinearExpr, MathProgram, Sense
from ..solver.simplex import NodeRecord

logger = logging.getLogger(__name__)

FAMILIES = (
    "p_b",
    "p_cell",
    "p_inv",
    "p_heat",
    "p_avail_high",
    "p_avail_low",
    "p_derate",
    "s_pos",
    "s_neg",
    "soc",
    "temp",
    "b_high",
    "b_low",
    "b_inv",
)
BINARY_FAMILIES = frozenset({"b_high", "b_low", "b_inv"})
OBJECTIVES = ("availability", "derating", "inverter", "battery")
TEMP_BOUNDS = (-100.0, 300.0)


class HorizonInputError(ValueError):
    pass


class ExtractionError(RuntimeError):
    def __init__(self, constraint: str, violation: float) -> None:
        super().__init__(f"{constraint} violated by {violation:.3e}")
        self.constraint = constraint
        self.violation = violation


@dataclass(frozen=True, eq=False)
class HorizonInput:
    """Everything one horizon build needs. Arrays are indexed ``[string, step]``."""

    strings: tuple[StringModel, ...]
    demand: np.ndarray
    dt: float
    init_soc: np.ndarray
    init_temp: np.ndarray
    frozen_resistance: np.ndarray
    frozen_ocv: np.ndarray
    frozen_k: np.ndarray
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    heat_anchor: np.ndarray | None = None
    label: str = "h0"

    @property
    def n_strings(self) -> int:
        return len(self.strings)

    @property
    def n_steps(self) -> int:
        return int(self.demand.shape[0])

    @property
    def dt_h(self) -> float:
        return self.dt / 3600.0

    @property
    def modes(self) -> tuple[Mode, ...]:
        return tuple(Mode.from_demand(float(d)) for d in self.demand)

    @property
    def fleet_power(self) -> float:
        return float(sum(model.p_nominal for model in self.strings))

    def big_m_avail(self, m: int) -> float:
        return self.controller.big_m_avail or self.strings[m].p_nominal

    def big_m_inv(self, m: int) -> float:
        return self.controller.big_m_inv or self.strings[m].p_nominal

    def eps_inv(self, m: int) -> float:
        if self.controller.eps_inv is not None:
            return self.controller.eps_inv
        return OFF_THRESHOLD_FRACTION * self.strings[m].p_nominal

    def validate(self) -> None:
        m, t = self.n_strings, self.n_steps
        if m < 1:
            raise HorizonInputError("at least one string is required")
        if t < 1 or self.demand.ndim != 1:
            raise HorizonInputError("demand must be a non-empty vector")
        if self.dt <= 0:
            raise HorizonInputError(f"dt must be positive, got {self.dt!r}")
        peak = float(np.max(np.abs(self.demand)))
        if peak > self.fleet_power * (1.0 + 1e-9):
            raise HorizonInputError(
                f"|demand| {peak:.3f} kW exceeds fleet power {self.fleet_power:.3f} kW"
            )
        for name in ("init_soc", "init_temp"):
            if getattr(self, name).shape != (m,):
                raise HorizonInputError(f"{name} must have shape ({m},)")
        if np.any(self.init_soc < 0.0) or np.any(self.init_soc > 1.0):
            raise HorizonInputError("init_soc outside [0, 1]")
        for name in ("frozen_resistance", "frozen_ocv", "frozen_k"):
            if getattr(self, name).shape != (m, t):
                raise HorizonInputError(f"{name} must have shape ({m}, {t})")
        if np.any(self.frozen_resistance <= 0.0) or np.any(self.frozen_ocv <= 0.0):
            raise HorizonInputError("frozen resistance and OCV must be positive")
        if np.any(self.frozen_k < 0.0) or np.any(self.frozen_k > 1.0):
            raise HorizonInputError("frozen derating factors outside [0, 1]")
        if self.heat_anchor is not None and self.heat_anchor.shape != (m, t):
            raise HorizonInputError(f"heat_anchor must have shape ({m}, {t})")

    @classmethod
    def at_state(
        cls,
        strings: Sequence[StringModel],
        demand: Sequence[float],
        dt: float,
        soc: Sequence[float],
        temp: Sequence[float],
        controller: ControllerConfig | None = None,
        k_first: Sequence[float] | None = None,
        label: str = "h0",
    ) -> HorizonInput:
        """Horizon with coefficients frozen on the initial state held constant."""
        demand_arr = np.asarray(demand, dtype=float)
        soc_arr = np.asarray(soc, dtype=float)
        temp_arr = np.asarray(temp, dtype=float)
        steps = demand_arr.shape[0]
        modes = tuple(Mode.from_demand(float(d)) for d in demand_arr)
        r, v, k = freeze_coefficients(
            strings,
            modes,
            np.repeat(soc_arr[:, None], steps, axis=1),
            np.repeat(temp_arr[:, None], steps, axis=1),
            k_first,
        )
        return cls(
            strings=tuple(strings),
            demand=demand_arr,
            dt=float(dt),
            init_soc=soc_arr,
            init_temp=temp_arr,
            frozen_resistance=r,
            frozen_ocv=v,
            frozen_k=k,
            controller=controller or ControllerConfig(),
            label=label,
        )


def freeze_coefficients(
    strings: Sequence[StringModel],
    modes: Sequence[Mode],
    soc_start: np.ndarray,
    temp_start: np.ndarray,
    k_first: Sequence[float] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Resistance (hard branch switch), OCV and derating factor per (string, step).

    ``soc_start``/``temp_start`` hold the state at the start of each step. Step 0
    takes ``k_first`` when given, later steps read the derating table.
    """
    shape = soc_start.shape
    r = np.empty(shape)
    v = np.empty(shape)
    k = np.empty(shape)
    for m, model in enumerate(strings):
        for t, mode in enumerate(modes):
            soc = float(np.clip(soc_start[m, t], 0.0, 1.0))
            temp = float(temp_start[m, t])
            r[m, t] = model.resistance_at(soc, temp, blend=False)
            v[m, t] = model.ocv_at(soc, mode)
            if t == 0 and k_first is not None:
                k[m, t] = k_first[m]
            else:
                k[m, t] = min(1.0, max(0.0, model.derate_table(temp)))
    return r, v, k


def heat_samples(
    model: StringModel,
    mode: Mode,
    ocv_v: float,
    r_ohm: float,
    k_derate: float,
    breakpoints: int = 6,
    anchor: float | None = None,
) -> list[tuple[float, float]]:
    """Battery heat (kW) at evenly spaced setpoints over ``[0, p_nominal]``.

    ``anchor`` replaces the nearest interior breakpoint. Setpoints beyond the
    deliverable discharge power continue the curve linearly with slope at least 1.
    """
    p_nominal = model.p_nominal
    xs = [float(x) for x in np.linspace(0.0, p_nominal, breakpoints)]
    if anchor is not None and breakpoints > 2 and 0.0 < anchor < p_nominal:
        nearest = min(range(1, breakpoints - 1), key=lambda i: (abs(xs[i] - anchor), i))
        xs[nearest] = float(anchor)
        xs.sort()
    points: list[tuple[float, float]] = []
    for p in xs:
        try:
            heat = electrical_response(model, p, k_derate, mode, ocv_v, r_ohm).heat
        except InfeasiblePowerError:
            break
        points.append((p, heat))
    if len(points) < len(xs):
        secant = 0.0
        if len(points) >= 2:
            (x0, y0), (x1, y1) = points[-2], points[-1]
            secant = (y1 - y0) / (x1 - x0)
        slope = max(1.0, secant)
        x_last, h_last = points[-1]
        points.extend((p, h_last + slope * (p - x_last)) for p in xs[len(points):])
    return points


def heat_curve(
    model: StringModel,
    mode: Mode,
    ocv_v: float,
    r_ohm: float,
    k_derate: float,
    breakpoints: int = 6,
    anchor: float | None = None,
) -> PwlTable:
    return convex_minorant(heat_samples(model, mode, ocv_v, r_ohm, k_derate, breakpoints, anchor))


@dataclass(frozen=True)
class ObjectiveScales:
    """Loss sums in kW are multiplied by ``factor`` to become normalized energy shares."""

    base_kwh: float
    factor: float
    degenerate: bool

    @property
    def scales(self) -> tuple[float, ...]:
        return (1.0 / self.base_kwh,) * len(OBJECTIVES)


def normalize_objectives(horizon: HorizonInput) -> ObjectiveScales:
    base = float(np.sum(np.abs(horizon.demand))) * horizon.dt_h
    if base <= 0.0:
        return ObjectiveScales(base_kwh=1.0, factor=horizon.dt_h, degenerate=True)
    return ObjectiveScales(base_kwh=base, factor=horizon.dt_h / base, degenerate=False)


def _name(family: str, m: int, t: int) -> str:
    return f"{family}[{m},{t}]"


def build_horizon_model(horizon: HorizonInput) -> MathProgram:
    horizon.validate()
    cfg = horizon.controller
    n_strings, n_steps = horizon.n_strings, horizon.n_steps
    modes = horizon.modes
    dt, dt_h = horizon.dt, horizon.dt_h
    demand = np.abs(horizon.demand)
    program = MathProgram(name=f"horizon-{horizon.label}")
    layout = {family: np.zeros((n_strings, n_steps), dtype=int) for family in FAMILIES}
    curves: list[list[PwlTable]] = []

    for m, model in enumerate(horizon.strings):
        p_n = model.p_nominal
        curves.append([])
        for t in range(n_steps):
            mode = modes[t]
            anchor = None if horizon.heat_anchor is None else float(horizon.heat_anchor[m, t])
            curve = heat_curve(
                model,
                mode,
                float(horizon.frozen_ocv[m, t]),
                float(horizon.frozen_resistance[m, t]),
                float(horizon.frozen_k[m, t]),
                cfg.heat_breakpoints,
                anchor,
            )
            curves[m].append(curve)
            heat_cap = max(0.0, curve.ys[-1])
            inv_cap = max(model.inverter.table(mode).ys)
            avail_cap = min(horizon.big_m_avail(m), demand[t])
            if mode == Mode.DISCHARGE:
                avail_cap += inv_cap + heat_cap
            bounds = {
                "p_b": (0.0, p_n),
                "p_cell": (0.0, p_n + inv_cap + heat_cap),
                "p_inv": (0.0, inv_cap),
                "p_heat": (0.0, heat_cap),
                "p_avail_high": (0.0, avail_cap if mode == Mode.CHARGE else 0.0),
                "p_avail_low": (0.0, avail_cap if mode == Mode.DISCHARGE else 0.0),
                "p_derate": (0.0, p_n),
                "s_pos": (0.0, p_n),
                "s_neg": (0.0, p_n),
                "soc": (0.0, 1.0),
                "temp": TEMP_BOUNDS,
                "b_high": (0.0, 1.0),
                "b_low": (0.0, 1.0),
                "b_inv": (0.0, 1.0),
            }
            for family in FAMILIES:
                lb, ub = bounds[family]
                layout[family][m, t] = program.add_variable(
                    _name(family, m, t), lb, ub, binary=family in BINARY_FAMILIES
                )

    def idx(family: str, m: int, t: int) -> int:
        return int(layout[family][m, t])

    for t in range(n_steps):
        program.add_constraint(
            f"demand[{t}]", {idx("p_b", m, t): 1.0 for m in range(n_strings)}, Sense.EQ, demand[t]
        )

    for m, model in enumerate(horizon.strings):
        thermal = model.thermal
        q_nominal = model.electrical.q_nominal
        for t in range(n_steps):
            mode = modes[t]
            charge = mode == Mode.CHARGE
            k = float(horizon.frozen_k[m, t])
            loss_sign = 1.0 if charge else -1.0
            avail = "p_avail_high" if charge else "p_avail_low"

            program.add_constraint(
                f"bal[{m},{t}]",
                {
                    idx("p_cell", m, t): 1.0,
                    idx("p_inv", m, t): loss_sign,
                    idx("p_heat", m, t): loss_sign,
                    idx(avail, m, t): 1.0,
                    idx("p_derate", m, t): 1.0,
                    idx("p_b", m, t): -1.0,
                    idx("s_pos", m, t): -1.0,
                    idx("s_neg", m, t): 1.0,
                },
                Sense.EQ,
                0.0,
            )

            gain = dt_h * 1000.0 / (q_nominal * float(horizon.frozen_ocv[m, t]))
            soc_row: LinearExpr = {
                idx("soc", m, t): 1.0,
                idx("p_cell", m, t): -gain if charge else gain,
            }
            soc_rhs = 0.0
            if t == 0:
                soc_rhs = float(horizon.init_soc[m])
            else:
                soc_row[idx("soc", m, t - 1)] = -1.0
            program.add_constraint(f"soc[{m},{t}]", soc_row, Sense.EQ, soc_rhs)

            big, eps = cfg.m_soc, cfg.eps_soc
            soc_j, high_j, low_j = idx("soc", m, t), idx("b_high", m, t), idx("b_low", m, t)
            program.add_constraint(
                f"high_on[{m},{t}]", {soc_j: 1.0, high_j: -big}, Sense.GE, 1.0 - eps - big
            )
            program.add_constraint(f"high_off[{m},{t}]", {soc_j: 1.0, high_j: -big}, Sense.LE, 1.0 - eps)
            program.add_constraint(f"low_on[{m},{t}]", {soc_j: 1.0, low_j: big}, Sense.LE, eps + big)
            program.add_constraint(f"low_off[{m},{t}]", {soc_j: 1.0, low_j: big}, Sense.GE, eps)
            program.add_constraint(f"excl[{m},{t}]", {high_j: 1.0, low_j: 1.0}, Sense.LE, 1.0)

            avail_var = program.variables[idx(avail, m, t)]
            program.add_constraint(
                f"avail_link[{m},{t}]",
                {idx(avail, m, t): 1.0, (high_j if charge else low_j): -avail_var.ub},
                Sense.LE,
                0.0,
            )

            inv_j, b_inv, p_b = idx("p_inv", m, t), idx("b_inv", m, t), idx("p_b", m, t)
            eps_inv = horizon.eps_inv(m)
            program.add_constraint(
                f"inv_on[{m},{t}]",
                {p_b: 1.0, b_inv: -min(horizon.big_m_inv(m), demand[t])},
                Sense.LE,
                eps_inv,
            )
            program.add_constraint(
                f"inv_cap[{m},{t}]", {inv_j: 1.0, b_inv: -horizon.big_m_inv(m)}, Sense.LE, eps_inv
            )
            inv_table = convex_minorant(model.inverter.table(mode).points)
            segments = pwl_segments(inv_table)
            fixed_on = 1.0 if k > 0.0 else 0.0
            for j, seg in enumerate(segments):
                program.add_constraint(
                    f"inv_seg{j}[{m},{t}]",
                    {inv_j: 1.0, p_b: -seg.slope * k, b_inv: -seg.intercept * fixed_on},
                    Sense.GE,
                    0.0,
                )
            x_lo, x_hi = inv_table.xs[0], inv_table.xs[-1]
            slope = (inv_table.ys[-1] - inv_table.ys[0]) / (x_hi - x_lo) if x_hi > x_lo else 0.0
            intercept = (inv_table.ys[0] - slope * x_lo) * fixed_on
            leak = max(max((seg.slope for seg in segments), default=0.0), 0.0) * k * eps_inv
            program.add_constraint(
                f"inv_chord[{m},{t}]",
                {inv_j: 1.0, p_b: -k * slope, b_inv: -(intercept - leak)},
                Sense.LE,
                leak,
            )

            heat_j = idx("p_heat", m, t)
            curve = curves[m][t]
            for j, seg in enumerate(pwl_segments(curve)):
                program.add_constraint(
                    f"heat_seg{j}[{m},{t}]",
                    {heat_j: 1.0, p_b: -seg.slope, b_inv: -seg.intercept},
                    Sense.GE,
                    0.0,
                )
            chord = curve.ys[-1] / curve.xs[-1] if curve.xs[-1] > 0 else 0.0
            program.add_constraint(
                f"heat_chord[{m},{t}]", {heat_j: 1.0, p_b: -chord}, Sense.LE, 0.0
            )

            program.add_constraint(
                f"derate[{m},{t}]", {idx("p_derate", m, t): 1.0, p_b: -(1.0 - k)}, Sense.EQ, 0.0
            )

            decay = 1.0 - dt * thermal.k2
            temp_row: LinearExpr = {
                idx("temp", m, t): 1.0,
                heat_j: -dt * thermal.k1 * 1000.0,
            }
            temp_rhs = dt * thermal.k2 * thermal.t_air
            if t == 0:
                temp_rhs += decay * float(horizon.init_temp[m])
            else:
                temp_row[idx("temp", m, t - 1)] = -decay
            program.add_constraint(f"temp[{m},{t}]", temp_row, Sense.EQ, temp_rhs)

    scales = normalize_objectives(horizon)
    objectives = _objective_expressions(layout, scales.factor, n_strings, n_steps)
    _add_stages(program, horizon, objectives, layout, scales.factor)

    program.meta.update(
        layout=layout,
        objectives=objectives,
        scales=scales,
        heat_curves=curves,
        input=horizon,
    )
    logger.debug(
        "[%s] horizon model: %d vars (%d binary), %d rows, %d stages",
        horizon.label, len(program), len(program.binaries), len(program.constraints), len(program.stages),
    )
    return program


def _objective_expressions(
    layout: dict[str, np.ndarray], factor: float, n_strings: int, n_steps: int
) -> dict[str, LinearExpr]:
    families = {
        "availability": ("p_avail_high", "p_avail_low"),
        "derating": ("p_derate",),
        "inverter": ("p_inv",),
        "battery": ("p_heat",),
    }
    out: dict[str, LinearExpr] = {}
    for name, members in families.items():
        expr: LinearExpr = {}
        for family in members:
            for m in range(n_strings):
                for t in range(n_steps):
                    expr[int(layout[family][m, t])] = factor
        out[name] = expr
    return out


def _add_stages(
    program: MathProgram,
    horizon: HorizonInput,
    objectives: dict[str, LinearExpr],
    layout: dict[str, np.ndarray],
    factor: float,
) -> None:
    cfg = horizon.controller
    groups: dict[int, list[int]] = {}
    for i, priority in enumerate(cfg.priorities):
        groups.setdefault(priority, []).append(i)
    ordered = sorted(groups, reverse=True)
    for rank, priority in enumerate(ordered):
        coefs: LinearExpr = {}
        for i in groups[priority]:
            for j, v in objectives[OBJECTIVES[i]].items():
                coefs[j] = coefs.get(j, 0.0) + cfg.weights[i] * v
        if rank == 0:
            penalty = cfg.slack_penalty * factor
            for family in ("s_pos", "s_neg"):
                for j in layout[family].ravel():
                    coefs[int(j)] = coefs.get(int(j), 0.0) + penalty
        if rank == len(ordered) - 1 and cfg.regularization > 0.0:
            for name in ("inverter", "battery"):
                for j, v in objectives[name].items():
                    coefs[j] = coefs.get(j, 0.0) + cfg.regularization * v
        label = "+".join(OBJECTIVES[i] for i in groups[priority])
        program.add_stage(priority, label, coefs)


@dataclass(eq=False)
class DispatchPlan:
    """Per-(string, step) solution arrays in kW (``soc`` as fraction, ``temp_pred`` in degC)."""

    p_b: np.ndarray
    p_ch: np.ndarray
    p_dch: np.ndarray
    p_inv: np.ndarray
    p_heat: np.ndarray
    p_avail_high: np.ndarray
    p_avail_low: np.ndarray
    p_derate_loss: np.ndarray
    slack_pos: np.ndarray
    slack_neg: np.ndarray
    soc: np.ndarray
    temp_pred: np.ndarray
    b_high: np.ndarray
    b_low: np.ndarray
    b_inv: np.ndarray
    modes: tuple[Mode, ...]
    demand: np.ndarray
    dt: float
    balance_residual: float
    objective_values: dict[str, float] = field(default_factory=dict)
    slp_iterations: int = 0
    converged: bool = False
    frozen_resistance: np.ndarray | None = None
    frozen_ocv: np.ndarray | None = None
    frozen_k: np.ndarray | None = None
    heat_exact: np.ndarray | None = None
    stage_optima: tuple[float, ...] = ()
    stage_values: tuple[float, ...] = ()
    node_log: list[NodeRecord] | None = field(default=None, repr=False)
    p_max: np.ndarray | None = None

    @property
    def n_strings(self) -> int:
        return int(self.p_b.shape[0])

    @property
    def n_steps(self) -> int:
        return int(self.p_b.shape[1])

    @property
    def p_avail(self) -> np.ndarray:
        return self.p_avail_high + self.p_avail_low

    @property
    def p_cell(self) -> np.ndarray:
        return self.p_ch + self.p_dch

    def served(self) -> np.ndarray:
        """Setpoints sent to the plant, net of planned unservable power."""
        return self.dispatch().served

    def dispatch(self, tol: float = 1e-6) -> PlantDispatch:
        """Split the plan into plant setpoints, served power and unservable power.

        A string planned with its inverter off, or planned to move no cell power while
        its SOC limit is active, gets no setpoint. Its share moves to the dispatched
        string of the same step serving the most power, up to that string's ``p_max``;
        the rest is unservable.
        """
        setpoint = self.p_b.copy()
        served = np.clip(setpoint - self.p_avail, 0.0, None)
        charge = np.array([mode == Mode.CHARGE for mode in self.modes], dtype=bool)[None, :]
        at_limit = np.where(charge, self.b_high, self.b_low) == 1
        idle = (self.b_inv == 0) | (at_limit & (self.p_cell <= tol))
        p_max = self.p_max if self.p_max is not None else np.full(self.n_strings, np.inf)
        for t in range(self.n_steps):
            active = [j for j in range(self.n_strings) if not idle[j, t]]
            for m in np.flatnonzero(idle[:, t]):
                residue = served[m, t]
                if residue <= 0.0:
                    continue
                served[m, t] = 0.0
                if active:
                    j = max(active, key=lambda i: (served[i, t], -i))
                    moved = min(residue, max(0.0, float(p_max[j]) - setpoint[j, t]))
                    setpoint[j, t] += moved
                    served[j, t] += moved
                    setpoint[m, t] -= moved
        return PlantDispatch(setpoint=setpoint, served=served, unservable=setpoint - served)


@dataclass(frozen=True, eq=False)
class PlantDispatch:
    """Per-(string, step) arrays in kW; ``setpoint = served + unservable`` on every entry."""

    setpoint: np.ndarray
    served: np.ndarray
    unservable: np.ndarray


def extract_solution(program: MathProgram, values: np.ndarray, tol: float = 1e-6) -> DispatchPlan:
    layout: dict[str, np.ndarray] = program.meta["layout"]
    horizon: HorizonInput = program.meta["input"]
    values = np.asarray(values, dtype=float)

    found = program.violations(values)
    if found and found[0][1] > tol:
        raise ExtractionError(*found[0])
    for j in program.binaries:
        frac = abs(values[j] - round(values[j]))
        if frac > tol:
            raise ExtractionError(program.variables[j].name, frac)

    arrays = {family: values[layout[family]] for family in FAMILIES}
    bits = {family: np.rint(arrays[family]).astype(int) for family in BINARY_FAMILIES}
    charge = np.array([mode == Mode.CHARGE for mode in horizon.modes], dtype=bool)[None, :]
    p_cell = arrays["p_cell"]

    residual = 0.0
    for row in program.constraints:
        if row.name.startswith("bal["):
            activity = sum(v * values[j] for j, v in row.coefs.items())
            residual = max(residual, abs(activity - row.rhs))

    return DispatchPlan(
        p_b=arrays["p_b"],
        p_ch=np.where(charge, p_cell, 0.0),
        p_dch=np.where(charge, 0.0, p_cell),
        p_inv=arrays["p_inv"],
        p_heat=arrays["p_heat"],
        p_avail_high=arrays["p_avail_high"],
        p_avail_low=arrays["p_avail_low"],
        p_derate_loss=arrays["p_derate"],
        slack_pos=arrays["s_pos"],
        slack_neg=arrays["s_neg"],
        soc=arrays["soc"],
        temp_pred=arrays["temp"],
        b_high=bits["b_high"],
        b_low=bits["b_low"],
        b_inv=bits["b_inv"],
        modes=horizon.modes,
        demand=horizon.demand.copy(),
        dt=horizon.dt,
        balance_residual=residual,
        objective_values={
            name: program.evaluate(expr, values) for name, expr in program.meta["objectives"].items()
        },
        frozen_resistance=horizon.frozen_resistance,
        frozen_ocv=horizon.frozen_ocv,
        frozen_k=horizon.frozen_k,
        p_max=np.array([model.p_nominal for model in horizon.strings]),
    )
