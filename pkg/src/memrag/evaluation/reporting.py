"""Report output: canonical JSON, a per-query CSV, and summary figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import Report

_CSV_COLUMNS = (
    "scenario",
    "query",
    "passed",
    "mode",
    "failures",
    "embed_s",
    "retrieve_s",
    "prompt_s",
    "complete_s",
    "total_s",
)


def report_to_dict(report: Report) -> dict:
    return {
        "schema_version": report.schema_version,
        "kind": report.kind,
        "passed": report.passed,
        "retrieval_accuracy": report.retrieval_accuracy,
        "latency": report.latency,
        "notes": list(report.notes),
        "scenarios": [
            {
                "name": run.name,
                "passed": run.passed,
                "queries": [
                    {
                        "query": row.query,
                        "passed": row.passed,
                        "failures": list(row.failures),
                        "mode": row.mode,
                        "response_text": row.response_text,
                        "retrieved": [
                            {"text": text, "score": score} for text, score in row.retrieved
                        ],
                        "stage_seconds": row.stage_seconds,
                    }
                    for row in run.queries
                ],
            }
            for run in report.scenarios
        ],
    }


def write_report_json(report: Report, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    body = json.dumps(report_to_dict(report), ensure_ascii=False, indent=2) + "\n"
    target.write_text(body, encoding="utf-8", newline="")
    return target


def write_report_csv(report: Report, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CSV_COLUMNS)
        for run in report.scenarios:
            for row in run.queries:
                writer.writerow(
                    [
                        run.name,
                        row.query,
                        row.passed,
                        row.mode,
                        " | ".join(row.failures),
                        f"{row.stage_seconds['embed']:.6f}",
                        f"{row.stage_seconds['retrieve']:.6f}",
                        f"{row.stage_seconds['prompt']:.6f}",
                        f"{row.stage_seconds['complete']:.6f}",
                        f"{row.stage_seconds['total']:.6f}",
                    ]
                )
    return target


def render_report_figures(report: Report, stem: str | Path) -> list[Path]:
    """Render summary charts next to the report; returns the files written."""
    base = Path(stem)
    base.parent.mkdir(parents=True, exist_ok=True)
    written = []

    stages = [stage for stage in report.latency if stage != "total"]
    p50 = [report.latency[stage]["p50"] * 1000 for stage in stages]
    p95 = [report.latency[stage]["p95"] * 1000 for stage in stages]
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    positions = range(len(stages))
    width = 0.38
    ax.bar([p - width / 2 for p in positions], p50, width=width, label="p50")
    ax.bar([p + width / 2 for p in positions], p95, width=width, label="p95")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(stages)
    ax.set_ylabel("latency (ms)")
    ax.set_title("Stage latency")
    ax.legend(frameon=False)
    fig.tight_layout()
    latency_path = base.with_name(base.name + "_latency.png")
    fig.savefig(latency_path, dpi=120)
    plt.close(fig)
    written.append(latency_path)

    names = [run.name for run in report.scenarios]
    pass_rates = [
        sum(row.passed for row in run.queries) / len(run.queries) if run.queries else 0.0
        for run in report.scenarios
    ]
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    bars = ax.bar(range(len(names)), pass_rates)
    for bar, rate in zip(bars, pass_rates):
        ax.text(
            bar.get_x() + bar.get_width() / 2,
            rate + 0.02,
            f"{rate:.0%}",
            ha="center",
            va="bottom",
            fontsize=8,
        )
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0, 1.12)
    ax.set_ylabel("queries passed")
    title = "Scenario outcomes"
    if report.retrieval_accuracy is not None:
        title += f" (retrieval accuracy {report.retrieval_accuracy:.0%})"
    ax.set_title(title)
    fig.tight_layout()
    outcomes_path = base.with_name(base.name + "_outcomes.png")
    fig.savefig(outcomes_path, dpi=120)
    plt.close(fig)
    written.append(outcomes_path)
    return written
