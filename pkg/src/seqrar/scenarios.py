"""Scenario files: a JSON ``base`` scenario plus per-row overrides.

A file either holds one scenario directly or has the shape::

    {"scenario_id": "table3", "base": {...}, "rows": [{...}, ...]}

where each row is deep-merged over ``base``. A file without ``rows`` is a
single configuration.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import Scenario, ScenarioError, check_scenario, deep_merge


def expand(doc: dict) -> list[Scenario]:
    if not isinstance(doc, dict):
        raise ScenarioError(["scenario file must hold a JSON object"])
    sid = doc.get("scenario_id")
    if "base" not in doc:
        raw_rows = [doc]
    else:
        raw_rows = [deep_merge(doc["base"], row) for row in doc.get("rows", [{}])]
    scenarios, problems = [], []
    for i, raw in enumerate(raw_rows, start=1):
        if sid is not None:
            raw.setdefault("scenario_id", sid)
        try:
            scenarios.append(check_scenario(Scenario.from_dict(raw)))
        except ScenarioError as exc:
            problems.extend(f"row {i}: {v}" for v in exc.violations)
    if problems:
        raise ScenarioError(problems)
    return scenarios


def load_scenarios(path: str | Path) -> list[Scenario]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError([f"scenario file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}: invalid JSON ({exc})"]) from None
    return expand(doc)


def dump_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario.to_dict(), indent=2, sort_keys=True)
