from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from memrag.embedding import DIMENSION, BuiltinEmbedder
from memrag.engine import Engine
from memrag.gateway import StubCompleter
from memrag.service import ServiceCore
from memrag.store import MemoryRecord, MemoryStore

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def embedder() -> BuiltinEmbedder:
    return BuiltinEmbedder()


@pytest.fixture
def store() -> MemoryStore:
    return MemoryStore()


@pytest.fixture
def engine(store) -> Engine:
    return Engine(store=store, embedder=BuiltinEmbedder(), completer=StubCompleter())


@pytest.fixture
def core(engine) -> ServiceCore:
    return ServiceCore(engine=engine)


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    vector = rng.standard_normal(DIMENSION)
    return vector / np.linalg.norm(vector)


def make_record(
    record_id: str,
    user_id: str,
    vector: np.ndarray,
    timestamp,
    text: str = "note",
    source_id: str = "src",
    chunk_index: int = 0,
) -> MemoryRecord:
    return MemoryRecord(
        record_id=record_id,
        user_id=user_id,
        text=text,
        timestamp=timestamp,
        source_id=source_id,
        chunk_index=chunk_index,
        vector=vector,
    )


def oracle_top_k(records, query_vector, k):
    """Independent full-scan ranking: per-record cosine via fsum, then three
    stable sorts for (score desc, timestamp desc, record_id asc)."""
    import math

    scored = []
    for record in records:
        dot = math.fsum(float(a) * float(b) for a, b in zip(query_vector, record.vector))
        norm_r = math.sqrt(math.fsum(float(x) * float(x) for x in record.vector))
        norm_q = math.sqrt(math.fsum(float(x) * float(x) for x in query_vector))
        scored.append((record, dot / (norm_r * norm_q)))
    scored.sort(key=lambda pair: pair[0].record_id)
    scored.sort(key=lambda pair: pair[0].timestamp, reverse=True)
    scored.sort(key=lambda pair: pair[1], reverse=True)
    return scored[:k]
