"""Prompt assembly: pick the generic or contextual template, keep retrieved
contexts above the relevance threshold, and window the recent transcript."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from typing import Sequence

from . import templates
from .errors import ValidationError
from .store import RetrievalResult
from .timestamps import format_rfc3339


class PromptMode(str, Enum):
    GENERIC = "GENERIC"
    CONTEXTUAL = "CONTEXTUAL"


@dataclass(frozen=True)
class ContextItem:
    text: str
    score: float
    record_id: str
    timestamp: datetime


@dataclass(frozen=True)
class PromptConfig:
    relevance_threshold: float = 0.35
    transcript_window_size: int = 4
    generic_template: str = templates.GENERIC_SYSTEM_TEMPLATE
    contextual_template: str = templates.CONTEXTUAL_SYSTEM_TEMPLATE

    def __post_init__(self) -> None:
        if not 0.0 <= self.relevance_threshold < 1.0:
            raise ValidationError(
                f"relevance_threshold must be in [0, 1), got {self.relevance_threshold!r}"
            )
        if self.transcript_window_size < 0:
            raise ValidationError("transcript_window_size must be >= 0")
        for name, template in (
            ("generic_template", self.generic_template),
            ("contextual_template", self.contextual_template),
        ):
            if templates.HONESTY_CLAUSE not in template:
                raise ValidationError(f"{name} must contain the honesty clause verbatim")


@dataclass(frozen=True)
class AssembledPrompt:
    mode: PromptMode
    system_text: str
    context_items: tuple[ContextItem, ...]
    transcript_window: tuple[tuple[str, str], ...]
    user_query: str

    def render_system(self) -> str:
        """System message content: template, context block, transcript."""
        parts = [self.system_text]
        if self.mode is PromptMode.CONTEXTUAL:
            lines = [templates.CONTEXT_HEADER]
            for number, item in enumerate(self.context_items, start=1):
                lines.append(f"{number}. [{format_rfc3339(item.timestamp)}] {item.text}")
            parts.append("\n".join(lines))
        if self.transcript_window:
            lines = [templates.TRANSCRIPT_HEADER]
            lines.extend(f"{role}: {text}" for role, text in self.transcript_window)
            parts.append("\n".join(lines))
        return "\n\n".join(parts)

    def render(self) -> str:
        """Full prompt as one string (system content plus the user line)."""
        return f"{self.render_system()}\n\n{templates.QUERY_PREFIX}{self.user_query}"


def build(
    query: str,
    results: Sequence[RetrievalResult],
    transcript: Sequence[tuple[str, str]] = (),
    config: PromptConfig | None = None,
    current_date: date | None = None,
) -> AssembledPrompt:
    """Assemble the prompt for one chat turn.

    Results at or above the relevance threshold survive, score descending;
    if none survive the prompt falls back to the generic template. Passing
    ``current_date`` opts into a server-date line; by default the model sees
    only the dates stored with the memories.
    """
    cfg = config or PromptConfig()
    if not isinstance(query, str) or not query.strip():
        raise ValidationError("query must be non-empty")
    kept = sorted(
        (r for r in results if r.score >= cfg.relevance_threshold),
        key=lambda r: -r.score,
    )
    items = tuple(
        ContextItem(
            text=r.record.text,
            score=r.score,
            record_id=r.record.record_id,
            timestamp=r.record.timestamp,
        )
        for r in kept
    )
    mode = PromptMode.CONTEXTUAL if items else PromptMode.GENERIC
    system_text = cfg.contextual_template if items else cfg.generic_template
    if current_date is not None:
        system_text = f"{system_text}\n{templates.SERVER_DATE_LINE.format(date=current_date.isoformat())}"
    window = cfg.transcript_window_size
    recent = tuple((role, text) for role, text in transcript[-window:]) if window else ()
    return AssembledPrompt(
        mode=mode,
        system_text=system_text,
        context_items=items,
        transcript_window=recent,
        user_query=query,
    )
