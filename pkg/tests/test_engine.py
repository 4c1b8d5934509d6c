from __future__ import annotations

from datetime import datetime, timezone

import pytest

from memrag.embedding import BuiltinEmbedder
from memrag.engine import Engine
from memrag.errors import BackendError, ValidationError
from memrag.gateway import StubCompleter
from memrag.prompting import PromptMode
from memrag.store import MemoryStore

T0 = datetime(2024, 12, 20, 18, 30, tzinfo=timezone.utc)

ANIME_NOTE = (
    "My colleagues at work would not stop talking about Anime on Netflix. "
    "I sure should watch one in the coming days."
)


class FailingEmbedder(BuiltinEmbedder):
    def embed_batch(self, texts):
        raise BackendError("embedding service down", reason="status")


class CapturingCompleter(StubCompleter):
    def __init__(self):
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        return super().complete(request)


class TestIngest:
    def test_short_entry_is_one_record(self, engine):
        records = engine.ingest("u1", "x" * 120, T0)
        assert len(records) == 1
        assert records[0].vector is not None

    def test_long_entry_chunks_by_stride(self, engine):
        records = engine.ingest("u1", "x" * 500, T0)
        assert len(records) == 3
        assert [r.chunk_index for r in records] == [0, 1, 2]

    def test_empty_entry_rejected(self, engine):
        with pytest.raises(ValidationError):
            engine.ingest("u1", "   ")

    def test_embed_failure_stores_nothing(self, store):
        engine = Engine(store=store, embedder=FailingEmbedder(), completer=StubCompleter())
        with pytest.raises(BackendError):
            engine.ingest("u1", "will not make it", T0)
        assert store.stats().n_records_per_user == {}


class TestAnswer:
    def test_empty_store_is_generic_unknown(self, engine):
        outcome = engine.answer("u1", "Who is the president of Nigeria?")
        assert outcome.mode is PromptMode.GENERIC
        assert outcome.response_text == "I DO NOT KNOW."
        assert outcome.results == []
        assert outcome.prompt_record_ids == []

    def test_retrieval_returns_ingested_record(self, engine):
        records = engine.ingest("u1", ANIME_NOTE, T0)
        outcome = engine.answer("u1", "Recommend a movie to watch this weekend?")
        assert [r.record.record_id for r in outcome.results] == [records[0].record_id]

    def test_prompt_record_ids_subset_of_results(self, engine):
        engine.ingest("u1", ANIME_NOTE, T0)
        outcome = engine.answer("u1", "anime on netflix anime")  # high lexical overlap
        retrieved_ids = {r.record.record_id for r in outcome.results}
        assert set(outcome.prompt_record_ids) <= retrieved_ids

    def test_stage_timings_cover_pipeline(self, store):
        ticks = iter(range(100))
        engine = Engine(
            store=store,
            embedder=BuiltinEmbedder(),
            completer=StubCompleter(),
            clock=lambda: float(next(ticks)),
        )
        outcome = engine.answer("u1", "anything")
        timings = outcome.timings
        assert (timings.embed, timings.retrieve, timings.prompt, timings.complete) == (
            1.0,
            1.0,
            1.0,
            1.0,
        )
        assert outcome.latency == timings.total == 4.0

    def test_transcript_reaches_prompt(self, store):
        completer = CapturingCompleter()
        engine = Engine(store=store, embedder=BuiltinEmbedder(), completer=completer)
        transcript = [("user", "earlier question"), ("assistant", "earlier answer")]
        engine.answer("u1", "next question", transcript=transcript)
        prompt = completer.requests[0].prompt
        assert prompt.transcript_window == tuple(transcript)

    def test_k_validated_before_running(self, engine):
        with pytest.raises(ValidationError):
            engine.answer("u1", "q", k=0)
        with pytest.raises(ValidationError):
            engine.answer("u1", "q", k=17)

    def test_k_caps_results(self, engine):
        for index in range(4):
            engine.ingest("u1", f"note number {index} about different things", T0)
        outcome = engine.answer("u1", "note number", k=2)
        assert len(outcome.results) == 2
