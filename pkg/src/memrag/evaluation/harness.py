"""Evaluation harness: replay scenarios against a fresh service, assert on
mode, retrieved texts, and response text, and score the synthetic corpus."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from ..engine import Engine
from ..errors import BackendError, MemragError, ValidationError
from ..service import ServiceCore
from ..store import MemoryStore
from .scenarios import Scenario, check_unique_names
from .synthetic import SyntheticConfig, generate_corpus

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1

SYNTHETIC_NOTE = (
    "Synthetic-corpus accuracy is measured on generated journal entries with "
    "the builtin embedder; it stands in for live-query accuracy, which is not "
    "reproducible offline."
)

_EVAL_USERNAME = "eval-user"
_EVAL_PASSWORD = "eval-password-1"

_STAGES = ("embed", "retrieve", "prompt", "complete", "total")


class EvalExecutionError(MemragError):
    """The system under evaluation failed; distinct from failed assertions."""

    category = "backend"


@dataclass(frozen=True)
class QueryRow:
    query: str
    passed: bool
    failures: tuple[str, ...]
    mode: str
    response_text: str
    retrieved: tuple[tuple[str, float], ...]  # (text, score) in rank order
    stage_seconds: dict[str, float]


@dataclass(frozen=True)
class ScenarioRun:
    name: str
    queries: tuple[QueryRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.queries)


@dataclass(frozen=True)
class Report:
    kind: str  # "scenarios" | "synthetic"
    scenarios: tuple[ScenarioRun, ...]
    retrieval_accuracy: float | None
    latency: dict[str, dict[str, float]]
    notes: tuple[str, ...] = ()
    schema_version: int = REPORT_SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(run.passed for run in self.scenarios)


def _percentile(values: Sequence[float], fraction: float) -> float:
    """Nearest-rank percentile; deterministic and tie-free."""
    ordered = sorted(values)
    if not ordered:
        return 0.0
    rank = min(len(ordered) - 1, max(0, math.ceil(fraction * len(ordered)) - 1))
    return ordered[rank]


def _latency_summary(rows: Sequence[QueryRow]) -> dict[str, dict[str, float]]:
    summary: dict[str, dict[str, float]] = {}
    for stage in _STAGES:
        samples = [row.stage_seconds[stage] for row in rows]
        summary[stage] = {
            "p50": _percentile(samples, 0.50),
            "p95": _percentile(samples, 0.95),
        }
    return summary


def _fresh_token(core: ServiceCore) -> str:
    core.register(_EVAL_USERNAME, _EVAL_PASSWORD)
    return core.login(_EVAL_USERNAME, _EVAL_PASSWORD).token


def _stage_seconds(outcome) -> dict[str, float]:
    timings = outcome.timings
    return {
        "embed": timings.embed,
        "retrieve": timings.retrieve,
        "prompt": timings.prompt,
        "complete": timings.complete,
        "total": timings.total,
    }


def _grade_scenario(scenario: Scenario, core: ServiceCore) -> tuple[ScenarioRun, int, int]:
    """Replay one scenario; returns its run plus (retrieval checks, hits)."""
    try:
        token = _fresh_token(core)
        for item in scenario.knowledge:
            core.ingest_entry(token, item.text, timestamp=item.timestamp)
    except (BackendError, ConnectionError) as exc:
        raise EvalExecutionError(f"system failed during setup: {exc}") from exc

    rows: list[QueryRow] = []
    expected = 0
    hit = 0
    for check in scenario.queries:
        try:
            outcome = core.chat(token, check.text, k=check.k)
        except (BackendError, ConnectionError) as exc:
            raise EvalExecutionError(f"system failed on query {check.text!r}: {exc}") from exc
        retrieved = tuple((r.record.text, r.score) for r in outcome.results)
        failures: list[str] = []
        if check.expect_mode is not None and outcome.mode.value != check.expect_mode:
            failures.append(f"expected mode {check.expect_mode}, got {outcome.mode.value}")
        if check.expect_retrieval_contains is not None:
            expected += 1
            if any(check.expect_retrieval_contains in text for text, _ in retrieved):
                hit += 1
            else:
                failures.append(
                    f"no retrieved text contains {check.expect_retrieval_contains!r}"
                )
        for needle in check.expect_response_contains:
            if needle not in outcome.response_text:
                failures.append(f"response does not contain {needle!r}")
        for needle in check.expect_response_excludes:
            if needle in outcome.response_text:
                failures.append(f"response must not contain {needle!r}")
        rows.append(
            QueryRow(
                query=check.text,
                passed=not failures,
                failures=tuple(failures),
                mode=outcome.mode.value,
                response_text=outcome.response_text,
                retrieved=retrieved,
                stage_seconds=_stage_seconds(outcome),
            )
        )
    return ScenarioRun(name=scenario.name, queries=tuple(rows)), expected, hit


def run(scenario: Scenario, core: ServiceCore) -> Report:
    """Replay one scenario on a fresh service instance and grade it."""
    scenario_run, expected, hit = _grade_scenario(scenario, core)
    return Report(
        kind="scenarios",
        scenarios=(scenario_run,),
        retrieval_accuracy=hit / expected if expected else None,
        latency=_latency_summary(scenario_run.queries),
    )


def run_suite(
    scenarios: Sequence[Scenario], core_factory: Callable[[], ServiceCore]
) -> Report:
    """Run each scenario on its own fresh service and merge the reports."""
    check_unique_names(list(scenarios))
    runs: list[ScenarioRun] = []
    all_rows: list[QueryRow] = []
    expected = 0
    hit = 0
    for scenario in scenarios:
        scenario_run, scenario_expected, scenario_hit = _grade_scenario(scenario, core_factory())
        runs.append(scenario_run)
        all_rows.extend(scenario_run.queries)
        expected += scenario_expected
        hit += scenario_hit
    return Report(
        kind="scenarios",
        scenarios=tuple(runs),
        retrieval_accuracy=hit / expected if expected else None,
        latency=_latency_summary(all_rows),
    )


def run_synthetic(
    config: SyntheticConfig | None = None,
    core_factory: Callable[[], ServiceCore] | None = None,
    k: int = 3,
) -> Report:
    """Score top-k retrieval on the generated corpus.

    Accuracy is the fraction of held-out queries whose top-k contains at
    least one record of the query's own topic.
    """
    cfg = config or SyntheticConfig()
    if not isinstance(k, int) or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k!r}")
    core = core_factory() if core_factory else ServiceCore(engine=Engine(store=MemoryStore()))
    entries, queries = generate_corpus(cfg)
    try:
        token = _fresh_token(core)
        topic_by_record: dict[str, str] = {}
        for entry in entries:
            for record in core.ingest_entry(token, entry.text, timestamp=entry.timestamp):
                topic_by_record[record.record_id] = entry.topic
    except BackendError as exc:
        raise EvalExecutionError(f"system failed during corpus ingest: {exc}") from exc

    rows: list[QueryRow] = []
    hit = 0
    for query in queries:
        try:
            outcome = core.chat(token, query.text, k=k)
        except BackendError as exc:
            raise EvalExecutionError(f"system failed on query {query.text!r}: {exc}") from exc
        topics = [topic_by_record.get(r.record.record_id) for r in outcome.results]
        correct = query.topic in topics
        hit += correct
        rows.append(
            QueryRow(
                query=query.text,
                passed=correct,
                failures=() if correct else (f"top-{k} holds no {query.topic!r} record",),
                mode=outcome.mode.value,
                response_text=outcome.response_text,
                retrieved=tuple((r.record.text, r.score) for r in outcome.results),
                stage_seconds=_stage_seconds(outcome),
            )
        )
    accuracy = hit / len(queries)
    return Report(
        kind="synthetic",
        scenarios=(ScenarioRun(name=f"synthetic-seed-{cfg.seed}", queries=tuple(rows)),),
        retrieval_accuracy=accuracy,
        latency=_latency_summary(rows),
        notes=(SYNTHETIC_NOTE,),
    )
