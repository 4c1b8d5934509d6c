"""Pipeline composition: ingest (chunk, embed, store) and answer
(embed, retrieve, assemble prompt, complete), with per-stage timings."""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass
from datetime import date, datetime
from typing import Callable, Sequence

from .chunking import ChunkConfig, make_records, split
from .embedding import BuiltinEmbedder, RemoteEmbedder, make_embedder
from .errors import ValidationError
from .gateway import DEFAULT_MODEL_NAME, CompletionRequest, StubCompleter, make_completer
from .prompting import PromptConfig, PromptMode, build
from .store import MAX_K, MemoryRecord, MemoryStore, RetrievalResult
from .timestamps import ensure_utc, utc_now


@dataclass(frozen=True)
class StageTimings:
    embed: float
    retrieve: float
    prompt: float
    complete: float

    @property
    def total(self) -> float:
        return self.embed + self.retrieve + self.prompt + self.complete


@dataclass(frozen=True)
class ChatOutcome:
    """Everything one answered query produced.

    ``results`` is the raw top-k retrieval; ``prompt_record_ids`` are exactly
    the ids whose texts entered the prompt (empty for generic answers).
    """

    response_text: str
    mode: PromptMode
    results: list[RetrievalResult]
    prompt_record_ids: list[str]
    backend: str
    timings: StageTimings
    latency: float


class Engine:
    """One user-facing pipeline over a store, an embedder, and a completer."""

    def __init__(
        self,
        store: MemoryStore | None = None,
        embedder: BuiltinEmbedder | RemoteEmbedder | None = None,
        completer=None,
        prompt_config: PromptConfig | None = None,
        chunk_config: ChunkConfig | None = None,
        default_k: int | None = None,
        model_name: str = DEFAULT_MODEL_NAME,
        temperature: float = 0.7,
        max_tokens: int = 512,
        clock: Callable[[], float] = time.perf_counter,
    ):
        self.store = store or MemoryStore()
        self.embedder = embedder or make_embedder()
        self.completer = completer if completer is not None else make_completer()
        self.prompt_config = prompt_config or PromptConfig()
        self.chunk_config = chunk_config or ChunkConfig()
        self.default_k = default_k
        self.model_name = model_name
        self.temperature = temperature
        self.max_tokens = max_tokens
        self._clock = clock

    def ingest(
        self,
        user_id: str,
        text: str,
        timestamp: datetime | None = None,
        source_id: str | None = None,
    ) -> list[MemoryRecord]:
        """Chunk, embed, and store one entry. All-or-nothing: if embedding
        fails, no record of the entry is stored."""
        if not isinstance(text, str) or not text.strip():
            raise ValidationError("entry text must be non-empty")
        stamp = ensure_utc(timestamp) if timestamp is not None else utc_now()
        chunks = split(text, self.chunk_config)
        records = make_records(chunks, user_id, source_id or uuid.uuid4().hex, stamp)
        vectors = self.embedder.embed_batch([record.text for record in records])
        for record, vector in zip(records, vectors):
            record.vector = vector
        self.store.add_batch(records)
        return records

    def answer(
        self,
        user_id: str,
        query: str,
        k: int | None = None,
        transcript: Sequence[tuple[str, str]] = (),
        current_date: date | None = None,
    ) -> ChatOutcome:
        """Run embed -> top_k -> prompt build -> completion for one query."""
        if k is not None and (not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= MAX_K):
            raise ValidationError(f"k must be an integer in [1, {MAX_K}], got {k!r}")
        clock = self._clock
        t0 = clock()
        query_vector = self.embedder.embed(query)
        t1 = clock()
        results = self.store.top_k(user_id, query_vector, k if k is not None else self.default_k)
        t2 = clock()
        prompt = build(
            query,
            results,
            transcript=transcript,
            config=self.prompt_config,
            current_date=current_date,
        )
        t3 = clock()
        completion = self.completer.complete(
            CompletionRequest(
                prompt=prompt,
                temperature=self.temperature,
                max_tokens=self.max_tokens,
                model_name=self.model_name,
            )
        )
        t4 = clock()
        timings = StageTimings(embed=t1 - t0, retrieve=t2 - t1, prompt=t3 - t2, complete=t4 - t3)
        return ChatOutcome(
            response_text=completion.text,
            mode=prompt.mode,
            results=results,
            prompt_record_ids=[item.record_id for item in prompt.context_items],
            backend=completion.backend,
            timings=timings,
            latency=t4 - t0,
        )
