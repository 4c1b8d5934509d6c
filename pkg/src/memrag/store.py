"""Per-user memory store: an exact flat-scan vector index with journaling.

Records are grouped into per-user shards; retrieval is a full cosine scan of
the caller's shard only, so tenants can never see each other's rows. Vectors
are canonicalized to 9 significant digits on insert, which makes journal
round-trips lossless: rankings before a save and after a reload are
bit-identical, and saving twice produces byte-identical files.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import JournalError, ValidationError
from .timestamps import ensure_utc, format_rfc3339, parse_rfc3339

logger = logging.getLogger(__name__)

DIMENSION = 384
DEFAULT_K = 3
MAX_K = 16

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_MICROSECOND = timedelta(microseconds=1)
_JOURNAL_FIELDS = ("record_id", "user_id", "text", "timestamp", "source_id", "chunk_index", "vector")


@dataclass(eq=False)
class MemoryRecord:
    """One embedded chunk of user knowledge plus its metadata."""

    record_id: str
    user_id: str
    text: str
    timestamp: datetime
    source_id: str
    chunk_index: int
    vector: np.ndarray | None = None


@dataclass(frozen=True)
class RetrievalResult:
    """A record paired with its cosine similarity to the query."""

    record: MemoryRecord
    score: float


@dataclass(frozen=True)
class StoreStats:
    n_records_per_user: dict[str, int]
    dimension: int = DIMENSION


@functools.lru_cache(maxsize=8)
def _nine_digit_format(length: int) -> str:
    return "%.9g," * length


def quantize_vector(vector: Sequence[float] | np.ndarray) -> np.ndarray:
    """Round components to 9 significant decimal digits (journal precision).

    One C-level printf over the whole vector keeps this fast enough to run
    on every insert.
    """
    arr = np.asarray(vector, dtype=np.float64)
    rendered = _nine_digit_format(arr.size) % tuple(arr)
    return np.array(rendered.split(",")[:-1], dtype=np.float64)


class _Shard:
    """Records of one user plus a lazily rebuilt score matrix."""

    __slots__ = ("records", "_matrix", "_norms", "_ts_us", "_dirty")

    def __init__(self) -> None:
        self.records: list[MemoryRecord] = []
        self._matrix: np.ndarray | None = None
        self._norms: np.ndarray | None = None
        self._ts_us: np.ndarray | None = None
        self._dirty = True

    def append(self, record: MemoryRecord) -> None:
        self.records.append(record)
        self._dirty = True

    def snapshot(self) -> tuple[tuple[MemoryRecord, ...], np.ndarray, np.ndarray, np.ndarray]:
        if self._dirty:
            self._matrix = np.stack([r.vector for r in self.records])
            self._norms = np.linalg.norm(self._matrix, axis=1)
            self._ts_us = np.array(
                [(r.timestamp - _EPOCH) // _MICROSECOND for r in self.records], dtype=np.int64
            )
            self._dirty = False
        return tuple(self.records), self._matrix, self._norms, self._ts_us


@dataclass(frozen=True)
class JournalLoadResult:
    loaded: int
    partial_lines_skipped: int


class MemoryStore:
    """Thread-safe multi-tenant record store with exact top-k retrieval."""

    def __init__(self) -> None:
        self._shards: dict[str, _Shard] = {}
        self._ids: set[str] = set()
        self._lock = threading.RLock()

    # ── write path ────────────────────────────────────────────────

    def add(self, record: MemoryRecord) -> str:
        """Insert one record; returns its id. Duplicate ids are rejected."""
        self.add_batch([record])
        return record.record_id

    def add_batch(self, records: Sequence[MemoryRecord]) -> list[str]:
        """Insert records atomically: either all are stored or none."""
        prepared = [self._prepare(record) for record in records]
        with self._lock:
            seen = set()
            for record in prepared:
                if record.record_id in self._ids or record.record_id in seen:
                    raise ValidationError(f"duplicate record_id {record.record_id!r}")
                seen.add(record.record_id)
            for record in prepared:
                self._ids.add(record.record_id)
                self._shards.setdefault(record.user_id, _Shard()).append(record)
        return [record.record_id for record in prepared]

    def _prepare(self, record: MemoryRecord) -> MemoryRecord:
        if not record.record_id:
            raise ValidationError("record_id must be non-empty")
        if not record.user_id:
            raise ValidationError("user_id must be non-empty")
        if not record.text:
            raise ValidationError("record text must be non-empty")
        if record.vector is None:
            raise ValidationError(f"record {record.record_id!r} has no vector")
        vector = np.asarray(record.vector, dtype=np.float64)
        if vector.shape != (DIMENSION,):
            raise ValidationError(
                f"record {record.record_id!r} vector has shape {vector.shape}, expected ({DIMENSION},)"
            )
        if not np.isfinite(vector).all():
            raise ValidationError(f"record {record.record_id!r} vector has non-finite components")
        record.vector = quantize_vector(vector)
        record.timestamp = ensure_utc(record.timestamp)
        return record

    def erase_user(self, user_id: str) -> int:
        """Drop all records of one user; returns how many were removed."""
        with self._lock:
            shard = self._shards.pop(user_id, None)
            if shard is None:
                return 0
            for record in shard.records:
                self._ids.discard(record.record_id)
            return len(shard.records)

    # ── read path ─────────────────────────────────────────────────

    def top_k(
        self, user_id: str, query_vector: Sequence[float] | np.ndarray, k: int | None = None
    ) -> list[RetrievalResult]:
        """The k records most similar to the query, score descending.

        Ties break toward the newer timestamp, then the smaller record_id.
        Unknown users yield an empty list; k outside [1, 16] is an error.
        """
        if k is None:
            k = DEFAULT_K
        if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= MAX_K:
            raise ValidationError(f"k must be an integer in [1, {MAX_K}], got {k!r}")
        scored = self._scored(user_id, query_vector)
        if scored is None:
            return []
        records, scores, ts_us = scored
        n = len(records)
        if n <= k:
            candidates: Iterable[int] = range(n)
        else:
            best = np.argpartition(-scores, k - 1)[:k]
            boundary = scores[best].min()
            candidates = np.flatnonzero(scores >= boundary)
        ranked = sorted(
            candidates, key=lambda i: (-scores[i], -int(ts_us[i]), records[i].record_id)
        )
        return [RetrievalResult(records[i], float(scores[i])) for i in ranked[:k]]

    def rank(
        self, user_id: str, query_vector: Sequence[float] | np.ndarray
    ) -> list[RetrievalResult]:
        """All of a user's records ordered like ``top_k`` (no k cap)."""
        scored = self._scored(user_id, query_vector)
        if scored is None:
            return []
        records, scores, ts_us = scored
        ranked = sorted(
            range(len(records)), key=lambda i: (-scores[i], -int(ts_us[i]), records[i].record_id)
        )
        return [RetrievalResult(records[i], float(scores[i])) for i in ranked]

    def _scored(
        self, user_id: str, query_vector: Sequence[float] | np.ndarray
    ) -> tuple[tuple[MemoryRecord, ...], np.ndarray, np.ndarray] | None:
        query = np.asarray(query_vector, dtype=np.float64)
        if query.shape != (DIMENSION,):
            raise ValidationError(f"query vector has shape {query.shape}, expected ({DIMENSION},)")
        if not np.isfinite(query).all():
            raise ValidationError("query vector has non-finite components")
        norm = float(np.linalg.norm(query))
        if norm == 0.0:
            raise ValidationError("query vector must be nonzero")
        with self._lock:
            shard = self._shards.get(user_id)
            if shard is None or not shard.records:
                return None
            records, matrix, norms, ts_us = shard.snapshot()
        # Row-wise multiply + pairwise reduction, not BLAS gemv: a score must
        # be a pure function of (row content, query) so that records with
        # identical vectors tie exactly and the documented timestamp/id
        # tie-break is observable. gemv kernels can differ per row position.
        scores = (matrix * query).sum(axis=1)
        np.divide(scores, norms * norm, out=scores)
        np.clip(scores, -1.0, 1.0, out=scores)
        return records, scores, ts_us

    def records_for(self, user_id: str) -> list[MemoryRecord]:
        """A user's records, newest first (ties by record_id)."""
        with self._lock:
            shard = self._shards.get(user_id)
            if shard is None:
                return []
            rows = list(shard.records)
        return sorted(rows, key=lambda r: (-int((r.timestamp - _EPOCH) // _MICROSECOND), r.record_id))

    def stats(self) -> StoreStats:
        with self._lock:
            counts = {user: len(shard.records) for user, shard in self._shards.items() if shard.records}
        return StoreStats(n_records_per_user=counts)

    # ── journal ───────────────────────────────────────────────────

    @staticmethod
    def serialize_record(record: MemoryRecord) -> str:
        payload = {
            "record_id": record.record_id,
            "user_id": record.user_id,
            "text": record.text,
            "timestamp": format_rfc3339(record.timestamp),
            "source_id": record.source_id,
            "chunk_index": record.chunk_index,
            "vector": record.vector.tolist(),
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"), allow_nan=False)

    def save_journal(self, path: str | Path) -> int:
        """Rewrite the journal canonically (sorted, compacted). Atomic."""
        target = Path(path)
        with self._lock:
            rows = [record for shard in self._shards.values() for record in shard.records]
        rows.sort(key=lambda r: (r.user_id, r.record_id))
        body = "".join(self.serialize_record(record) + "\n" for record in rows)
        target.parent.mkdir(parents=True, exist_ok=True)
        scratch = target.with_name(target.name + ".tmp")
        scratch.write_text(body, encoding="utf-8", newline="")
        os.replace(scratch, target)
        return len(rows)

    def append_journal(self, path: str | Path, records: Sequence[MemoryRecord]) -> None:
        """Append freshly added records without rewriting (crash-safe adds)."""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "a", encoding="utf-8", newline="") as handle:
            for record in records:
                handle.write(self.serialize_record(record) + "\n")

    def load_journal(self, path: str | Path) -> JournalLoadResult:
        """Load records from a journal into this store.

        An unparseable *final* fragment (torn write) is skipped and counted
        as a partial line; a malformed interior line raises ``JournalError``
        naming its line number.
        """
        raw = Path(path).read_text(encoding="utf-8")
        pieces = raw.split("\n")
        tail: str | None = None
        if pieces and pieces[-1] == "":
            pieces.pop()
        elif pieces:
            tail = pieces.pop()
        loaded = 0
        partial = 0
        for number, line in enumerate(pieces, start=1):
            self._load_line(line, number)
            loaded += 1
        if tail is not None:
            try:
                self._load_line(tail, len(pieces) + 1)
                loaded += 1
            except JournalError:
                partial = 1
                logger.warning(
                    "journal %s: skipped partial trailing line %d", path, len(pieces) + 1
                )
        return JournalLoadResult(loaded=loaded, partial_lines_skipped=partial)

    def _load_line(self, line: str, number: int) -> None:
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise JournalError(f"journal line {number}: invalid JSON ({exc.msg})", number) from exc
        if not isinstance(payload, dict) or any(key not in payload for key in _JOURNAL_FIELDS):
            raise JournalError(f"journal line {number}: missing record fields", number)
        try:
            vector = np.asarray(payload["vector"], dtype=np.float64)
            record = MemoryRecord(
                record_id=str(payload["record_id"]),
                user_id=str(payload["user_id"]),
                text=str(payload["text"]),
                timestamp=parse_rfc3339(payload["timestamp"]),
                source_id=str(payload["source_id"]),
                chunk_index=int(payload["chunk_index"]),
                vector=vector,
            )
            self.add(record)
        except (ValidationError, ValueError, TypeError) as exc:
            raise JournalError(f"journal line {number}: {exc}", number) from exc
