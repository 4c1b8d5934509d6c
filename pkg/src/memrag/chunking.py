"""Recursive character chunking.

Long texts are split along a separator hierarchy (paragraph, line, space,
character by default). Each level segments the text with the separator kept
on the preceding piece, then packs consecutive segments greedily into windows
no longer than ``max_size``. A segment that alone exceeds ``max_size`` is
recursed with the remaining levels. Splits at the space and character levels
are forced across natural boundaries, so consecutive windows there share up
to ``floor(max_size * overlap_fraction)`` characters for continuity;
paragraph and line splits keep natural boundaries with no overlap.

Offsets are in Unicode scalar values, never bytes, so a split can never
bisect a code point.
"""

from __future__ import annotations

import math
import uuid
from dataclasses import dataclass, field
from datetime import datetime

from .errors import ValidationError
from .store import MemoryRecord
from .timestamps import ensure_utc

DEFAULT_MAX_SIZE = 200
DEFAULT_OVERLAP_FRACTION = 0.25
DEFAULT_SEPARATORS: tuple[str, ...] = ("\n\n", "\n", " ", "")

#: split_level value for text that fit in a single chunk without splitting.
WHOLE_INPUT = "whole-input"

_LEVEL_NAMES = {"\n\n": "paragraph", "\n": "line", " ": "space", "": "character"}

# Separators whose windows are forced mid-flow and therefore overlap.
_OVERLAP_SEPARATORS = frozenset({" ", ""})


@dataclass(frozen=True)
class ChunkConfig:
    """Chunking parameters. Defaults: 200-char windows with 25% overlap."""

    max_size: int = DEFAULT_MAX_SIZE
    overlap_fraction: float = DEFAULT_OVERLAP_FRACTION
    separator_hierarchy: tuple[str, ...] = DEFAULT_SEPARATORS

    def __post_init__(self) -> None:
        if not isinstance(self.max_size, int) or self.max_size < 2:
            raise ValidationError(f"max_size must be an integer >= 2, got {self.max_size!r}")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValidationError(
                f"overlap_fraction must be in [0, 1), got {self.overlap_fraction!r}"
            )
        if self.overlap_chars >= self.max_size:
            raise ValidationError("overlap must be smaller than max_size")
        hierarchy = tuple(self.separator_hierarchy)
        object.__setattr__(self, "separator_hierarchy", hierarchy)
        if not hierarchy:
            raise ValidationError("separator_hierarchy must not be empty")
        if hierarchy[-1] != "":
            raise ValidationError("separator_hierarchy must end with the character level ('')")
        if "" in hierarchy[:-1]:
            raise ValidationError("the character level ('') may only be the last separator")

    @property
    def overlap_chars(self) -> int:
        return math.floor(self.max_size * self.overlap_fraction)


@dataclass(frozen=True)
class Chunk:
    """One window of the source text, with offsets back into it."""

    text: str
    start_offset: int
    end_offset: int
    chunk_index: int
    split_level: str


def split(text: str, config: ChunkConfig | None = None) -> list[Chunk]:
    """Split ``text`` into chunks of at most ``config.max_size`` characters.

    Returns chunks ordered by start offset; their intervals cover the whole
    input, and each chunk's text equals the source slice at its offsets.
    Empty input yields an empty list.
    """
    cfg = config or ChunkConfig()
    if not text:
        return []
    if len(text) <= cfg.max_size:
        return [Chunk(text, 0, len(text), 0, WHOLE_INPUT)]
    spans = _split_spans(text, 0, cfg.separator_hierarchy, cfg)
    spans = _merge_separator_only(text, spans, cfg)
    return [
        Chunk(text[start:end], start, end, index, level)
        for index, (start, end, level) in enumerate(spans)
    ]


def make_records(
    chunks: list[Chunk],
    user_id: str,
    source_id: str,
    timestamp: datetime,
) -> list[MemoryRecord]:
    """Wrap chunks from one ``split`` call into memory records (vector unset)."""
    if not user_id:
        raise ValidationError("user_id must be non-empty")
    if not source_id:
        raise ValidationError("source_id must be non-empty")
    stamp = ensure_utc(timestamp)
    return [
        MemoryRecord(
            record_id=uuid.uuid4().hex,
            user_id=user_id,
            text=chunk.text,
            timestamp=stamp,
            source_id=source_id,
            chunk_index=chunk.chunk_index,
            vector=None,
        )
        for chunk in chunks
    ]


def _level_name(separator: str, depth: int) -> str:
    return _LEVEL_NAMES.get(separator, f"level-{depth}")


def _split_spans(
    text: str,
    base: int,
    levels: tuple[str, ...],
    cfg: ChunkConfig,
) -> list[tuple[int, int, str]]:
    """Spans (absolute start, absolute end, level name) covering ``text``."""
    for depth, separator in enumerate(levels):
        if separator == "" or separator in text:
            break
    if separator == "":
        return _character_spans(len(text), base, cfg, _level_name("", depth))
    return _pack_segments(text, base, separator, levels, depth, cfg)


def _character_spans(
    length: int, base: int, cfg: ChunkConfig, level: str
) -> list[tuple[int, int, str]]:
    stride = cfg.max_size - cfg.overlap_chars
    spans = []
    position = 0
    while True:
        end = min(position + cfg.max_size, length)
        spans.append((base + position, base + end, level))
        if end == length:
            return spans
        position += stride


def _segment_spans(text: str, separator: str) -> list[tuple[int, int]]:
    """Contiguous spans of ``text`` cut after each separator occurrence."""
    spans = []
    start = 0
    width = len(separator)
    length = len(text)
    while True:
        hit = text.find(separator, start)
        if hit == -1:
            if start < length:
                spans.append((start, length))
            return spans
        spans.append((start, hit + width))
        start = hit + width


def _pack_segments(
    text: str,
    base: int,
    separator: str,
    levels: tuple[str, ...],
    depth: int,
    cfg: ChunkConfig,
) -> list[tuple[int, int, str]]:
    level = _level_name(separator, depth)
    overlap = cfg.overlap_chars if separator in _OVERLAP_SEPARATORS else 0
    max_size = cfg.max_size
    segments = _segment_spans(text, separator)
    spans: list[tuple[int, int, str]] = []
    window_start: int | None = None

    index = 0
    while index < len(segments):
        seg_start, seg_end = segments[index]
        if seg_end - seg_start > max_size:
            # Oversize segment: close the open window and recurse deeper.
            if window_start is not None:
                spans.append((base + window_start, base + seg_start, level))
                window_start = None
            spans.extend(_split_spans(text[seg_start:seg_end], base + seg_start, levels[depth + 1 :], cfg))
            index += 1
            continue
        if window_start is None:
            window_start = seg_start
        elif seg_end - window_start > max_size:
            # Segment does not fit: emit the window, restart at an earlier
            # segment boundary when this level carries overlap.
            spans.append((base + window_start, base + seg_start, level))
            if overlap:
                window_start = _overlap_restart(segments, index, window_start, overlap, max_size)
            else:
                window_start = seg_start
        index += 1
    if window_start is not None:
        spans.append((base + window_start, base + segments[-1][1], level))
    return spans


def _overlap_restart(
    segments: list[tuple[int, int]],
    failed_index: int,
    previous_start: int,
    overlap: int,
    max_size: int,
) -> int:
    """Earliest segment boundary that keeps at most ``overlap`` shared
    characters with the closed window while still fitting the failed segment."""
    seg_start, seg_end = segments[failed_index]
    restart = seg_start
    scan = failed_index - 1
    while scan >= 0:
        boundary = segments[scan][0]
        if (
            boundary <= previous_start
            or boundary < seg_start - overlap
            or seg_end - boundary > max_size
        ):
            break
        restart = boundary
        scan -= 1
    return restart


def _merge_separator_only(
    text: str,
    spans: list[tuple[int, int, str]],
    cfg: ChunkConfig,
) -> list[tuple[int, int, str]]:
    """Fold windows made purely of separator characters into the following
    chunk when the result still fits; lone trailing runs are kept as-is."""
    separator_chars = set("".join(cfg.separator_hierarchy))
    if not separator_chars:
        return spans
    merged: list[tuple[int, int, str]] = []
    pending: tuple[int, int, str] | None = None
    for span in spans:
        start, end, level = span
        if pending is not None:
            if end - pending[0] <= cfg.max_size:
                start = pending[0]
                span = (start, end, level)
            else:
                merged.append(pending)
            pending = None
        if all(ch in separator_chars for ch in text[start:end]):
            pending = span
        else:
            merged.append(span)
    if pending is not None:
        merged.append(pending)
    return merged
