"""Shipped experiment scenarios, one JSON file per (example, case).

Examples 1 and 2 are the small reference configurations with known exact
outcomes (the empty-subdomain cases pin observation placement via clusters so
the splitting step lands on fixed post-split loads). Examples 3 and 4 use
frozen seeded non-uniform counts on star and chain topologies.
"""

from __future__ import annotations

import json
from importlib import resources

from .errors import ScenarioError
from .scenarios import Scenario, scenario_from_dict

EXAMPLE_CASES: dict[int, tuple[str, ...]] = {
    1: ("1", "2"),
    2: ("1", "2", "3", "4"),
    3: ("p2", "p4", "p8", "p16", "p32"),
    4: ("p2", "p4", "p8", "p16", "p32"),
}


def _file_name(example: int, case: str) -> str:
    if example in (1, 2):
        return f"example{example}_case{case}.json"
    return f"example{example}_{case}.json"


def scenario_text(example: int, case: str) -> str:
    if example not in EXAMPLE_CASES or case not in EXAMPLE_CASES[example]:
        raise ScenarioError(
            f"unknown example/case {example}/{case}; cases for example "
            f"{example}: {EXAMPLE_CASES.get(example, ())}"
        )
    ref = resources.files("dydd").joinpath("scenarios_data", _file_name(example, case))
    return ref.read_text(encoding="utf-8")


def example_scenario(example: int, case: str, seed: int | None = None, **overrides) -> Scenario:
    """Load a shipped scenario; seed/field overrides produce a new Scenario."""
    obj = json.loads(scenario_text(example, case))
    if seed is not None:
        obj["seed"] = seed
    for key, value in overrides.items():
        if value is not None:
            obj[key] = value
    return scenario_from_dict(obj)
