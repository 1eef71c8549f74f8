from __future__ import annotations

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class TableSpec(BaseModel):
    """A lookup table given inline or as a two-column CSV file."""

    points: Optional[List[Tuple[float, float]]] = Field(
        default=None, description="Inline (x, y) breakpoints"
    )
    csv: Optional[str] = Field(
        default=None, description="CSV path, relative to the scenario file"
    )

    @model_validator(mode="after")
    def _one_source(self) -> TableSpec:
        if (self.points is None) == (self.csv is None):
            raise ValueError("table needs exactly one of 'points' or 'csv'")
        return self


class ElectricalConfig(BaseModel):
    p_nominal: float = Field(100.0, gt=0, description="Inverter nominal power per string, kW")
    q_nominal: float = Field(156.0, gt=0, description="String capacity, Ah")
    n_series: int = Field(192, ge=1, description="Cells in series")
    n_parallel: int = Field(2, ge=1, description="Cells in parallel")
    ocv_discharge: Optional[TableSpec] = Field(
        default=None, description="Cell OCV vs SOC in discharge, V (scaled by n_series)"
    )
    ocv_charge: Optional[TableSpec] = Field(
        default=None, description="Cell OCV vs SOC in charge, V (scaled by n_series)"
    )


class ResistanceConfig(BaseModel):
    r_soc: Optional[TableSpec] = Field(default=None, description="Cell resistance vs SOC, mOhm")
    r_temp: Optional[TableSpec] = Field(
        default=None, description="Cell resistance vs temperature, mOhm"
    )
    r_temp_max: float = Field(2.5, gt=0, description="Upper cap of the temperature branch, mOhm")
    soc_threshold: float = Field(0.1, gt=0, lt=1, description="SOC below which r_soc applies")
    eps_soc: float = Field(0.01, ge=0, description="Half-width of the blending band")


class ThermalConfig(BaseModel):
    n_nodes: int = Field(10, ge=2, description="FDM node count")
    c_total: float = Field(4.0e6, gt=0, description="String heat capacity, J/K")
    k_cond: float = Field(5.0e4, gt=0, description="Inter-node conductance, W/K")
    h_conv: float = Field(200.0, gt=0, description="Convective coefficient times area, W/K")
    t_air: float = Field(25.0, description="Cooling air temperature, degC")


class DeratingConfig(BaseModel):
    kp: float = Field(0.035, ge=0, description="Proportional gain, 1/K")
    ki: float = Field(0.0035, ge=0, description="Integral gain, 1/(K step)")
    t_start: float = Field(45.0, description="Derating onset, degC")
    t_stop: float = Field(60.0, description="Full curtailment, degC")
    table: Optional[TableSpec] = Field(
        default=None, description="Optimizer derating LUT k(T); defaults to a ramp"
    )


class InverterConfig(BaseModel):
    charge: Optional[TableSpec] = Field(default=None, description="Charge loss vs AC power, kW")
    discharge: Optional[TableSpec] = Field(
        default=None, description="Discharge loss vs AC power, kW"
    )


class StringOverride(BaseModel):
    """Per-string deviations from the fleet-wide sections."""

    electrical: Optional[ElectricalConfig] = None
    thermal: Optional[ThermalConfig] = None
    derating: Optional[DeratingConfig] = None
    soc: Optional[float] = Field(default=None, ge=0, le=1, description="Initial SOC")
    temp: Optional[float] = Field(default=None, description="Initial temperature, degC")


class FleetConfig(BaseModel):
    n_strings: int = Field(2, ge=1, description="Number of parallel strings")
    initial_soc: float = Field(0.5, ge=0, le=1, description="Initial SOC of every string")
    initial_temp: Optional[float] = Field(
        default=None, description="Initial temperature; defaults to the air temperature"
    )
    strings: List[StringOverride] = Field(default_factory=list)

    @model_validator(mode="after")
    def _override_count(self) -> FleetConfig:
        if self.strings and len(self.strings) != self.n_strings:
            raise ValueError(
                f"fleet.strings has {len(self.strings)} entries for {self.n_strings} strings"
            )
        return self


class ControllerConfig(BaseModel):
    weights: Tuple[float, float, float, float] = Field(
        (1.0, 1.0, 1.0, 1.0), description="W1..W4: availability, derating, inverter, battery"
    )
    priorities: Tuple[int, int, int, int] = Field(
        (2, 1, 1, 1), description="P1..P4, larger is solved first"
    )
    big_m_avail: Optional[float] = Field(default=None, gt=0, description="Defaults to p_nominal")
    big_m_inv: Optional[float] = Field(default=None, gt=0, description="Defaults to p_nominal")
    m_soc: float = Field(1.0, gt=0)
    eps_soc: float = Field(0.01, gt=0, lt=0.5, description="SOC band of the availability binaries")
    eps_inv: Optional[float] = Field(default=None, ge=0, description="Defaults to 1e-3 p_nominal")
    eps1: float = Field(1e-6, ge=0, description="Lexicographic relaxation")
    slack_penalty: float = Field(1e3, gt=0)
    regularization: float = Field(1e-3, ge=0, description="Weight on unpriced loss objectives")
    heat_breakpoints: int = Field(6, ge=2)

    @field_validator("weights")
    @classmethod
    def _non_negative(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(w < 0 for w in value):
            raise ValueError("weights must be non-negative")
        return value


class BnbConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    integrality_tol: float = Field(1e-6, gt=0)
    gap_tol: float = Field(1e-6, gt=0, description="Relative optimality gap")
    max_nodes: int = Field(100_000, ge=1)
    max_lp_iterations: int = Field(50_000, ge=1)
    branching: Literal["most_fractional"] = "most_fractional"
    node_order: Literal["best_bound"] = "best_bound"
    log_nodes: bool = Field(False, description="Keep a per-node log")


class SlpConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iters: int = Field(10, ge=1)
    temp_tol: float = Field(0.1, gt=0, description="degC")
    soc_tol: float = Field(0.005, gt=0)
    damping: float = Field(1.0, gt=0, le=1)
    clamp_infeasible: bool = Field(
        True, description="Clamp propagation at the deliverable power instead of failing"
    )


class SolverConfig(BaseModel):
    bnb: BnbConfig = Field(default_factory=BnbConfig)
    slp: SlpConfig = Field(default_factory=SlpConfig)


class SimulationConfig(BaseModel):
    horizon_steps: int = Field(8, ge=1, description="T")
    dt: float = Field(900.0, gt=0, description="Step length, s")
    apply_steps: Optional[int] = Field(default=None, ge=1, description="Defaults to T")
    duration_steps: int = Field(96, ge=1)

    @model_validator(mode="after")
    def _apply_window(self) -> SimulationConfig:
        apply = self.apply_steps or self.horizon_steps
        if apply > self.horizon_steps:
            raise ValueError("apply_steps must not exceed horizon_steps")
        if self.duration_steps < apply:
            raise ValueError("duration_steps must be at least apply_steps")
        return self

    @property
    def effective_apply_steps(self) -> int:
        return self.apply_steps or self.horizon_steps


class DemandConfig(BaseModel):
    source: Literal["direct", "price", "zero"] = Field(
        "price", description="Demand values, price-arbitrage synthesis or idle"
    )
    values: Optional[List[float]] = Field(default=None, description="Inline demand, kW (+charge)")
    csv: Optional[str] = Field(default=None, description="Demand or price CSV path")
    prices: Optional[List[float]] = Field(default=None, description="Inline price profile")
    block_steps: int = Field(8, ge=1, description="Block length of the synthetic two-level prices")
    arbitrage_power: Optional[float] = Field(
        default=None, gt=0, description="Fleet power of the price rule; defaults to full power"
    )
    jitter: float = Field(0.0, ge=0, description="Std-dev of seeded price noise")
    seed: Optional[int] = None


class CalibrationConfig(BaseModel):
    target: float = Field(0.012, gt=0, description="Expected sensitivity, degC/kW")
    tolerance: float = Field(0.004, gt=0)
    max_lumped_deviation: float = Field(0.1, gt=0, description="degC over 24 h")
    max_root_residual: float = Field(1e-9, gt=0)
    soc: float = Field(0.5, ge=0, le=1)


class ScenarioConfig(BaseModel):
    fleet: FleetConfig = Field(default_factory=FleetConfig)
    electrical: ElectricalConfig = Field(default_factory=ElectricalConfig)
    resistance: ResistanceConfig = Field(default_factory=ResistanceConfig)
    thermal: ThermalConfig = Field(default_factory=ThermalConfig)
    derating: DeratingConfig = Field(default_factory=DeratingConfig)
    inverter: InverterConfig = Field(default_factory=InverterConfig)
    controller: ControllerConfig = Field(default_factory=ControllerConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    demand: DemandConfig = Field(default_factory=DemandConfig)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)


class SweepPoint(BaseModel):
    label: str = Field(..., min_length=1)
    w3: float = Field(..., ge=0, le=1, description="Inverter loss weight")
    w4: float = Field(..., ge=0, le=1, description="Battery loss weight")


DEFAULT_SWEEP = (
    SweepPoint(label="S1", w3=1.0, w4=0.0),
    SweepPoint(label="S2", w3=0.5, w4=0.5),
    SweepPoint(label="S3", w3=0.0, w4=1.0),
)


class RunManifest(BaseModel):
    command: str
    config_path: Optional[str] = None
    output_dir: str
    seed: Optional[int] = None
    version: str
    config_sha256: str
    generated_at: str


class KpiReport(BaseModel):
    availability: float = Field(..., description="%")
    derating_eff: float = Field(..., description="%")
    inverter_eff: float = Field(..., description="%")
    battery_eff: float = Field(..., description="%")
    system_eff: float = Field(..., description="%")
    peak_mean_temp: float = Field(..., description="degC")
    final_soc_spread: float
    degenerate: bool = False


class SweepOutcome(BaseModel):
    label: str
    w3: float
    w4: float
    kpis: Optional[KpiReport] = None
    error: Optional[str] = None
    counters: Dict[str, float] = Field(default_factory=dict, description="Solver counters of the run")

    @property
    def ok(self) -> bool:
        return self.kpis is not None
