"""Scenario files: a named knowledge set plus queries with expectations.

Schema (JSON, ``schema_version`` 1)::

    {
      "schema_version": 1,
      "name": "...",
      "knowledge": [{"text": "...", "timestamp": "RFC 3339"}],
      "queries": [{
        "text": "...",
        "k": 3,                                  # optional
        "expect_mode": "GENERIC"|"CONTEXTUAL",   # optional
        "expect_retrieval_contains": "substr",   # optional
        "expect_response_contains": ["sub", …],  # optional
        "expect_response_excludes": ["sub", …]   # optional
      }]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources
from pathlib import Path

from ..errors import ValidationError
from ..store import MAX_K
from ..timestamps import parse_rfc3339

SCENARIO_SCHEMA_VERSION = 1

GOLDEN_NAMES = (
    "general_knowledge",
    "generic_recommendation",
    "personalized_recommendation",
    "event_reminder",
    "writing_style",
)


@dataclass(frozen=True)
class KnowledgeItem:
    text: str
    timestamp: datetime


@dataclass(frozen=True)
class QueryCheck:
    text: str
    k: int | None = None
    expect_mode: str | None = None
    expect_retrieval_contains: str | None = None
    expect_response_contains: tuple[str, ...] = ()
    expect_response_excludes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    knowledge: tuple[KnowledgeItem, ...]
    queries: tuple[QueryCheck, ...]


def parse_scenario(payload: dict) -> Scenario:
    if not isinstance(payload, dict):
        raise ValidationError("scenario must be a JSON object")
    version = payload.get("schema_version")
    if version != SCENARIO_SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported scenario schema_version {version!r}, expected {SCENARIO_SCHEMA_VERSION}"
        )
    name = payload.get("name")
    if not isinstance(name, str) or not name.strip():
        raise ValidationError("scenario name must be a non-empty string")
    knowledge = []
    for index, item in enumerate(payload.get("knowledge", [])):
        if not isinstance(item, dict) or not isinstance(item.get("text"), str) or not item["text"]:
            raise ValidationError(f"knowledge[{index}] must have non-empty text")
        knowledge.append(
            KnowledgeItem(text=item["text"], timestamp=parse_rfc3339(item.get("timestamp", "")))
        )
    raw_queries = payload.get("queries")
    if not isinstance(raw_queries, list) or not raw_queries:
        raise ValidationError("scenario must define at least one query")
    queries = []
    for index, item in enumerate(raw_queries):
        where = f"queries[{index}]"
        if not isinstance(item, dict) or not isinstance(item.get("text"), str) or not item["text"].strip():
            raise ValidationError(f"{where} must have non-empty text")
        k = item.get("k")
        if k is not None and (not isinstance(k, int) or not 1 <= k <= MAX_K):
            raise ValidationError(f"{where}.k must be an integer in [1, {MAX_K}]")
        mode = item.get("expect_mode")
        if mode is not None and mode not in ("GENERIC", "CONTEXTUAL"):
            raise ValidationError(f"{where}.expect_mode must be GENERIC or CONTEXTUAL")
        retrieval = item.get("expect_retrieval_contains")
        if retrieval is not None and (not isinstance(retrieval, str) or not retrieval):
            raise ValidationError(f"{where}.expect_retrieval_contains must be a non-empty string")

        def substrings(key: str) -> tuple[str, ...]:
            values = item.get(key, [])
            if not isinstance(values, list):
                raise ValidationError(f"{where}.{key} must be a list of strings")
            for value in values:
                if not isinstance(value, str) or not value:
                    raise ValidationError(f"{where}.{key} entries must be non-empty strings")
            return tuple(values)

        queries.append(
            QueryCheck(
                text=item["text"],
                k=k,
                expect_mode=mode,
                expect_retrieval_contains=retrieval,
                expect_response_contains=substrings("expect_response_contains"),
                expect_response_excludes=substrings("expect_response_excludes"),
            )
        )
    return Scenario(name=name.strip(), knowledge=tuple(knowledge), queries=tuple(queries))


def load_scenario(path: str | Path) -> Scenario:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scenario {path} is not valid JSON: {exc}") from exc
    return parse_scenario(payload)


def check_unique_names(scenarios: list[Scenario]) -> None:
    seen: set[str] = set()
    for scenario in scenarios:
        if scenario.name in seen:
            raise ValidationError(f"duplicate scenario name {scenario.name!r} in suite")
        seen.add(scenario.name)


def bundled_scenarios() -> list[Scenario]:
    """The golden scenarios shipped with the package."""
    loaded = []
    for name in GOLDEN_NAMES:
        ref = resources.files(__package__).joinpath("goldens", f"{name}.json")
        loaded.append(parse_scenario(json.loads(ref.read_text(encoding="utf-8"))))
    return loaded
