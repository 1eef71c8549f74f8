"""Validates a scenario file and the plant/controller objects it builds."""

from __future__ import annotations

import sys
from pathlib import Path
from typing import List

from bessplit.config_manager import ScenarioError, ScenarioManager

CONFIG_PATH = Path("bessplit/config/scenario.example.json")


def main(argv: List[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    path = Path(argv[0]) if argv else CONFIG_PATH
    if not path.exists():
        print(f"{path} does not exist")
        return 1
    manager = ScenarioManager(path)
    try:
        config = manager.load()
        strings = manager.build_strings()
        scenario = manager.build_scenario()
    except ScenarioError as exc:
        print("Scenario invalid:\n")
        print(exc)
        return 1

    warnings: List[str] = []
    for section in ("thermal", "controller", "demand"):
        if section not in manager.declared_sections:
            warnings.append(f"Section '{section}' not declared, defaults apply")
    if scenario.demand.size < config.simulation.duration_steps:
        warnings.append(
            f"Demand covers {scenario.demand.size} of {config.simulation.duration_steps} steps"
        )
    if warnings:
        print("Warnings:")
        for item in warnings:
            print(f" - {item}")
        return 1

    print(f"Scenario OK ({manager.checksum[:12]}). Strings:")
    for m, model in enumerate(strings):
        print(f" - string {m}: {model.p_nominal:.0f} kW, {model.thermal.n_nodes} thermal nodes")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
