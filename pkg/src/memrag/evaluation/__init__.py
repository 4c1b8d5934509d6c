"""Evaluation harness: golden scenarios, a synthetic corpus, and reports."""

from .harness import (
    EvalExecutionError,
    QueryRow,
    Report,
    ScenarioRun,
    run,
    run_suite,
    run_synthetic,
)
from .reporting import (
    render_report_figures,
    report_to_dict,
    write_report_csv,
    write_report_json,
)
from .scenarios import (
    GOLDEN_NAMES,
    KnowledgeItem,
    QueryCheck,
    Scenario,
    bundled_scenarios,
    load_scenario,
    parse_scenario,
)
from .synthetic import (
    SyntheticConfig,
    SyntheticEntry,
    SyntheticQuery,
    generate_corpus,
    topic_keywords,
)

__all__ = [
    "EvalExecutionError",
    "GOLDEN_NAMES",
    "KnowledgeItem",
    "QueryCheck",
    "QueryRow",
    "Report",
    "Scenario",
    "ScenarioRun",
    "SyntheticConfig",
    "SyntheticEntry",
    "SyntheticQuery",
    "bundled_scenarios",
    "generate_corpus",
    "load_scenario",
    "parse_scenario",
    "render_report_figures",
    "report_to_dict",
    "run",
    "run_suite",
    "run_synthetic",
    "topic_keywords",
    "write_report_csv",
    "write_report_json",
]
