"""Operator CLI: run the service, ingest entries, ask one-shot questions,
and run evaluations.

Exit codes: 0 success, 1 assertion or validation failure, 2 transport or
backend failure. ``--output json`` emits one machine-parseable JSON document;
text output is for humans and not a stability surface.

``ingest`` and ``ask`` run against a local journal by default (builtin
embedder, stub completer unless the config says otherwise); pass
``--endpoint/--token`` to go through a running service instead.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import httpx

from . import __version__
from .config import ServiceConfig, load_config
from .engine import Engine
from .errors import AuthError, BackendError, MemragError, ValidationError
from .evaluation import (
    EvalExecutionError,
    bundled_scenarios,
    load_scenario,
    render_report_figures,
    report_to_dict,
    run_suite,
    run_synthetic,
    write_report_csv,
    write_report_json,
)
from .evaluation.scenarios import check_unique_names
from .evaluation.synthetic import SyntheticConfig
from .service import build_service
from .timestamps import parse_rfc3339

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BACKEND = 2


def _exit_code(error: Exception) -> int:
    if isinstance(error, (BackendError, EvalExecutionError, httpx.HTTPError)):
        return EXIT_BACKEND
    return EXIT_FAILURE


def _fail(error: Exception) -> None:
    click.echo(f"error: {error}", err=True)
    sys.exit(_exit_code(error))


def _load_service_config(config_path: str | None) -> ServiceConfig:
    return load_config(config_path) if config_path else load_config()


def _local_engine(config: ServiceConfig, journal: str | None) -> tuple[Engine, Path | None]:
    """Engine over a local journal; user ids are the --user strings."""
    from .embedding import make_embedder
    from .gateway import make_completer
    from .prompting import PromptConfig

    engine = Engine(
        embedder=make_embedder(config.embedder),
        completer=make_completer(config.gateway),
        prompt_config=PromptConfig(
            relevance_threshold=config.relevance_threshold,
            transcript_window_size=config.transcript_window,
        ),
        default_k=config.default_k,
        model_name=config.gateway.model_name,
    )
    journal_path = Path(journal) if journal else (
        Path(config.journal_path) if config.journal_path else None
    )
    if journal_path and journal_path.exists():
        engine.store.load_journal(journal_path)
    return engine, journal_path


@click.group()
@click.version_option(version=__version__, prog_name="memrag")
def main() -> None:
    """Personal-memory retrieval-augmented generation toolkit."""


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file.")
@click.option("--host", default=None, help="Listen address override.")
@click.option("--port", type=int, default=None, help="Listen port override.")
@click.option("--journal", default=None, type=click.Path(), help="Journal file override.")
def serve(config_path: str | None, host: str | None, port: int | None, journal: str | None) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .api import create_app

    try:
        config = _load_service_config(config_path)
        config = replace(
            config,
            host=host or config.host,
            port=port or config.port,
            journal_path=journal or config.journal_path,
        )
        app = create_app(config)
    except MemragError as error:
        _fail(error)
        return
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    except (OSError, SystemExit) as error:  # bind failure and friends
        click.echo(f"error: could not serve: {error}", err=True)
        sys.exit(EXIT_BACKEND)


@main.command()
@click.argument("source", type=click.Path(), default="-")
@click.option("--user", required=True, help="User the entry belongs to.")
@click.option("--timestamp", default=None, help="Entry timestamp (RFC 3339); defaults to now.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--journal", default=None, type=click.Path(), help="Local journal to persist into.")
@click.option("--endpoint", default=None, help="Base URL of a running service.")
@click.option("--token", default=None, help="Session token for --endpoint mode.")
@click.option("--output", type=click.Choice(["text", "json"]), default="text")
def ingest(
    source: str,
    user: str,
    timestamp: str | None,
    config_path: str | None,
    journal: str | None,
    endpoint: str | None,
    token: str | None,
    output: str,
) -> None:
    """Ingest a UTF-8 text file (or stdin with '-') as one entry."""
    try:
        if source == "-":
            text = sys.stdin.read()
        else:
            text = Path(source).read_text(encoding="utf-8")
        stamp = parse_rfc3339(timestamp) if timestamp else None
        if endpoint:
            if not token:
                raise ValidationError("--endpoint mode requires --token")
            body: dict = {"text": text}
            if timestamp:
                body["timestamp"] = timestamp
            response = httpx.post(
                f"{endpoint.rstrip('/')}/v1/memories",
                json=body,
                headers={"Authorization": f"Bearer {token}"},
                timeout=30.0,
            )
            payload = _check_service_response(response)
            record_ids = payload["record_ids"]
        else:
            engine, journal_path = _local_engine(_load_service_config(config_path), journal)
            records = engine.ingest(user, text, timestamp=stamp)
            if journal_path:
                engine.store.append_journal(journal_path, records)
            record_ids = [record.record_id for record in records]
    except OSError as error:
        click.echo(f"error: cannot read {source}: {error}", err=True)
        sys.exit(EXIT_FAILURE)
    except MemragError as error:
        _fail(error)
        return
    except httpx.HTTPError as error:
        _fail(error)
        return
    if output == "json":
        click.echo(json.dumps({"record_ids": record_ids}))
    else:
        for record_id in record_ids:
            click.echo(record_id)


@main.command()
@click.argument("query")
@click.option("--user", default="local", help="User whose memories to search.")
@click.option("--k", type=int, default=None, help="How many memories to retrieve.")
@click.option("--show-contexts", is_flag=True, help="Print retrieved contexts with scores.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--journal", default=None, type=click.Path(), help="Local journal to read.")
@click.option("--endpoint", default=None, help="Base URL of a running service.")
@click.option("--token", default=None, help="Session token for --endpoint mode.")
@click.option("--output", type=click.Choice(["text", "json"]), default="text")
def ask(
    query: str,
    user: str,
    k: int | None,
    show_contexts: bool,
    config_path: str | None,
    journal: str | None,
    endpoint: str | None,
    token: str | None,
    output: str,
) -> None:
    """Ask one question and print the answer."""
    try:
        if endpoint:
            if not token:
                raise ValidationError("--endpoint mode requires --token")
            body: dict = {"query": query}
            if k is not None:
                body["k"] = k
            response = httpx.post(
                f"{endpoint.rstrip('/')}/v1/chat",
                json=body,
                headers={"Authorization": f"Bearer {token}"},
                timeout=60.0,
            )
            payload = _check_service_response(response)
        else:
            engine, _ = _local_engine(_load_service_config(config_path), journal)
            outcome = engine.answer(user, query, k=k)
            payload = {
                "response_text": outcome.response_text,
                "mode": outcome.mode.value,
                "retrieved": [
                    {
                        "record_id": result.record.record_id,
                        "score": result.score,
                        "text": result.record.text,
                    }
                    for result in outcome.results
                ],
                "latency": outcome.latency,
            }
    except MemragError as error:
        _fail(error)
        return
    except httpx.HTTPError as error:
        _fail(error)
        return
    if output == "json":
        click.echo(json.dumps(payload, ensure_ascii=False))
        return
    click.echo(payload["response_text"])
    if show_contexts:
        for item in payload["retrieved"]:
            click.echo(f"  [{item['score']:.4f}] {item['text']}")


def _check_service_response(response: httpx.Response) -> dict:
    payload = response.json()
    if response.status_code >= 400:
        error = payload.get("error", {})
        category = error.get("category", "internal")
        message = error.get("message", "service error")
        if category == "backend":
            raise BackendError(message)
        if category == "auth":
            raise AuthError(message)
        raise ValidationError(message)
    return payload


@main.command(name="eval")
@click.argument("scenario_paths", nargs=-1, type=click.Path())
@click.option("--synthetic", is_flag=True, help="Score the generated corpus instead of scenarios.")
@click.option("--seed", type=int, default=42, show_default=True, help="Synthetic corpus seed.")
@click.option("--k", type=int, default=3, show_default=True, help="Top-k for the synthetic run.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--report", "report_path", type=click.Path(), default=None, help="Write report JSON here (CSV and figures land alongside).")
@click.option("--output", type=click.Choice(["text", "json"]), default="text")
def eval_command(
    scenario_paths: tuple[str, ...],
    synthetic: bool,
    seed: int,
    k: int,
    config_path: str | None,
    report_path: str | None,
    output: str,
) -> None:
    """Run evaluation scenarios (bundled ones by default) or --synthetic."""
    try:
        config = _load_service_config(config_path)
        if synthetic:
            report = run_synthetic(
                SyntheticConfig(seed=seed), core_factory=lambda: build_service(config), k=k
            )
        else:
            if scenario_paths:
                scenarios = [load_scenario(path) for path in scenario_paths]
            else:
                scenarios = bundled_scenarios()
            check_unique_names(scenarios)
            report = run_suite(scenarios, core_factory=lambda: build_service(config))
        written: list[Path] = []
        if report_path:
            target = Path(report_path)
            written.append(write_report_json(report, target))
            written.append(write_report_csv(report, target.with_suffix(".csv")))
            written.extend(render_report_figures(report, target.with_suffix("")))
    except MemragError as error:
        _fail(error)
        return
    if output == "json":
        click.echo(json.dumps(report_to_dict(report), ensure_ascii=False))
    else:
        for run_result in report.scenarios:
            for row in run_result.queries:
                status = "PASS" if row.passed else "FAIL"
                click.echo(f"[{status}] {run_result.name}: {row.query}")
                for failure in row.failures:
                    click.echo(f"       {failure}")
        if report.retrieval_accuracy is not None:
            click.echo(f"retrieval accuracy: {report.retrieval_accuracy:.3f}")
        for path in written:
            click.echo(f"wrote {path}")
    if not report.passed:
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    main()
