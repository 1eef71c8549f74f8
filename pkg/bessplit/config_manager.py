from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from .models import (
    DeratingConfig,
    ElectricalConfig,
    ScenarioConfig,
    TableSpec,
    ThermalConfig,
)
from .piecewise import PwlError, PwlTable, load_table_csv, pwl_build
from .plant.derating import PiDerateController
from .plant.ecm import (
    CHARGE_HYSTERESIS_V,
    CellResistanceModel,
    StringElectricalParams,
    default_ocv_discharge_cell,
)
from .plant.inverter import OFF_THRESHOLD_FRACTION, InverterModel, default_inverter_tables
from .plant.string_model import StringModel
from .plant.thermal import ThermalParams
from .sim.cosim import Scenario
from .sim.ems import load_profile_csv, price_arbitrage, two_level_prices

logger = logging.getLogger(__name__)


class ScenarioError(ValueError):
    def __init__(self, path: Optional[Path], message: str) -> None:
        super().__init__(f"{path or '<defaults>'}: {message}")
        self.path = path


class ScenarioManager:
    """Loads a scenario file, validates it and builds the runtime objects."""

    def __init__(self, config_path: Optional[Path] = None) -> None:
        self._config_path = Path(config_path) if config_path is not None else None
        self._raw = b"{}"
        self._declared: frozenset[str] = frozenset()
        self._config = ScenarioConfig()

    @property
    def config(self) -> ScenarioConfig:
        return self._config

    @property
    def path(self) -> Optional[Path]:
        return self._config_path

    @property
    def declared_sections(self) -> frozenset[str]:
        return self._declared

    @property
    def checksum(self) -> str:
        return hashlib.sha256(self._raw).hexdigest()

    @property
    def base_dir(self) -> Path:
        return self._config_path.parent if self._config_path is not None else Path.cwd()

    def load(self) -> ScenarioConfig:
        if self._config_path is None:
            self._config = ScenarioConfig()
            return self._config
        if not self._config_path.exists():
            raise ScenarioError(self._config_path, "file does not exist")
        self._raw = self._config_path.read_bytes()
        self._config = self._load_file()
        return self._config

    def _load_file(self) -> ScenarioConfig:
        try:
            data = json.loads(self._raw.decode("utf-8") or "{}")
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ScenarioError(self._config_path, f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ScenarioError(self._config_path, "top level must be an object")
        self._declared = frozenset(data)
        try:
            return ScenarioConfig.model_validate(data)
        except ValidationError as exc:
            raise ScenarioError(self._config_path, str(exc)) from exc

    def require_sections(self, *names: str) -> None:
        missing = [name for name in names if name not in self._declared]
        if missing:
            raise ScenarioError(self._config_path, f"missing section(s): {', '.join(missing)}")

    def _table(self, spec: TableSpec) -> PwlTable:
        try:
            if spec.points is not None:
                return pwl_build(spec.points)
            path = Path(spec.csv)
            if not path.is_absolute():
                path = self.base_dir / path
            if not path.exists():
                raise ScenarioError(path, "table file does not exist")
            return load_table_csv(path)
        except PwlError as exc:
            raise ScenarioError(self._config_path, str(exc)) from exc

    def _electrical(self, cfg: ElectricalConfig) -> StringElectricalParams:
        cell_discharge = (
            self._table(cfg.ocv_discharge) if cfg.ocv_discharge else default_ocv_discharge_cell()
        )
        cell_charge = (
            self._table(cfg.ocv_charge) if cfg.ocv_charge else cell_discharge.shifted(CHARGE_HYSTERESIS_V)
        )
        return StringElectricalParams(
            p_nominal=cfg.p_nominal,
            q_nominal=cfg.q_nominal,
            n_series=cfg.n_series,
            n_parallel=cfg.n_parallel,
            ocv_charge=cell_charge.scaled(cfg.n_series),
            ocv_discharge=cell_discharge.scaled(cfg.n_series),
        )

    def _resistance(self) -> CellResistanceModel:
        cfg = self._config.resistance
        defaults = CellResistanceModel()
        return CellResistanceModel(
            r_soc=self._table(cfg.r_soc) if cfg.r_soc else defaults.r_soc,
            r_temp=self._table(cfg.r_temp) if cfg.r_temp else defaults.r_temp,
            r_temp_max=cfg.r_temp_max,
            soc_threshold=cfg.soc_threshold,
            eps_soc=cfg.eps_soc,
        )

    def _string(
        self,
        electrical: ElectricalConfig,
        thermal: ThermalConfig,
        derating: DeratingConfig,
    ) -> StringModel:
        params = self._electrical(electrical)
        inverter_cfg = self._config.inverter
        charge, discharge = default_inverter_tables(params.p_nominal)
        eps_inv = self._config.controller.eps_inv
        inverter = InverterModel(
            charge=self._table(inverter_cfg.charge) if inverter_cfg.charge else charge,
            discharge=self._table(inverter_cfg.discharge) if inverter_cfg.discharge else discharge,
            off_threshold=(
                OFF_THRESHOLD_FRACTION * params.p_nominal if eps_inv is None else eps_inv
            ),
        )
        return StringModel(
            electrical=params,
            resistance=self._resistance(),
            thermal=ThermalParams(**thermal.model_dump()),
            controller=PiDerateController(
                kp=derating.kp, ki=derating.ki, t_start=derating.t_start, t_stop=derating.t_stop
            ),
            derate_table=self._table(derating.table) if derating.table else None,
            inverter=inverter,
        )

    def build_strings(self) -> tuple[StringModel, ...]:
        cfg = self._config
        overrides = cfg.fleet.strings or [None] * cfg.fleet.n_strings
        models = []
        try:
            for override in overrides:
                models.append(
                    self._string(
                        (override and override.electrical) or cfg.electrical,
                        (override and override.thermal) or cfg.thermal,
                        (override and override.derating) or cfg.derating,
                    )
                )
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(self._config_path, str(exc)) from exc
        return tuple(models)

    def initial_state(self, strings: tuple[StringModel, ...]) -> tuple[tuple[float, ...], tuple[float, ...]]:
        fleet = self._config.fleet
        socs, temps = [], []
        for m, model in enumerate(strings):
            override = fleet.strings[m] if fleet.strings else None
            soc = override.soc if override and override.soc is not None else fleet.initial_soc
            temp = override.temp if override and override.temp is not None else fleet.initial_temp
            socs.append(float(soc))
            temps.append(float(model.thermal.t_air if temp is None else temp))
        return tuple(socs), tuple(temps)

    def build_demand(
        self, fleet_power: float, demand_path: Optional[Path] = None, seed: Optional[int] = None
    ) -> np.ndarray:
        """Signed demand profile in kW. ``demand_path`` overrides the configured source."""
        cfg = self._config.demand
        steps = self._config.simulation.duration_steps
        if demand_path is not None:
            profile = load_profile_csv(demand_path)
        elif cfg.source == "zero":
            profile = np.zeros(steps)
        elif cfg.source == "direct":
            if cfg.values is not None:
                profile = np.asarray(cfg.values, dtype=float)
            elif cfg.csv is not None:
                profile = load_profile_csv(self._resolve(cfg.csv))
            else:
                raise ScenarioError(self._config_path, "direct demand needs 'values' or 'csv'")
        else:
            if cfg.prices is not None:
                prices = np.asarray(cfg.prices, dtype=float)
            elif cfg.csv is not None:
                prices = load_profile_csv(self._resolve(cfg.csv))
            else:
                prices = two_level_prices(steps, cfg.block_steps)
            power = cfg.arbitrage_power or fleet_power
            if power > fleet_power:
                raise ScenarioError(self._config_path, "arbitrage_power exceeds fleet power")
            profile = price_arbitrage(prices, power, cfg.jitter, cfg.seed if seed is None else seed)
        peak = float(np.max(np.abs(profile))) if profile.size else 0.0
        if peak > fleet_power * (1.0 + 1e-9):
            raise ScenarioError(
                self._config_path, f"demand peak {peak:.2f} kW exceeds fleet power {fleet_power:.2f} kW"
            )
        return profile

    def _resolve(self, name: str) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.base_dir / path

    def build_scenario(
        self,
        demand_path: Optional[Path] = None,
        horizon_steps: Optional[int] = None,
        apply_steps: Optional[int] = None,
        seed: Optional[int] = None,
        log_nodes: bool = False,
        label: str = "run",
    ) -> Scenario:
        cfg = self._config
        strings = self.build_strings()
        soc, temp = self.initial_state(strings)
        horizon = horizon_steps or cfg.simulation.horizon_steps
        apply = apply_steps or cfg.simulation.apply_steps or horizon
        fleet_power = float(sum(model.p_nominal for model in strings))
        demand = self.build_demand(fleet_power, demand_path, seed)
        bnb = cfg.solver.bnb.model_copy(update={"log_nodes": True}) if log_nodes else cfg.solver.bnb
        try:
            return Scenario(
                strings=strings,
                initial_soc=soc,
                initial_temp=temp,
                demand=demand,
                dt=cfg.simulation.dt,
                horizon_steps=horizon,
                apply_steps=apply,
                duration_steps=cfg.simulation.duration_steps,
                controller=cfg.controller,
                bnb=bnb,
                slp=cfg.solver.slp,
                label=label,
            )
        except ValueError as exc:
            raise ScenarioError(self._config_path, str(exc)) from exc
