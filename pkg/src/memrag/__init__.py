"""memrag: personal-memory retrieval-augmented generation.

Ingest a user's notes, chunk and embed them, retrieve the most relevant
memories for each question by cosine similarity, and assemble an honest
prompt for a pluggable completion backend — as a library, a multi-tenant
HTTP service, a CLI, and an evaluation harness.
"""

__version__ = "0.1.0"

from .chunking import Chunk, ChunkConfig, make_records, split
from .embedding import (
    DIMENSION,
    BuiltinEmbedder,
    EmbedderConfig,
    RemoteEmbedder,
    cosine,
    make_embedder,
)
from .engine import ChatOutcome, Engine, StageTimings
from .errors import AuthError, BackendError, JournalError, MemragError, ValidationError
from .gateway import (
    CompletionRequest,
    CompletionResult,
    GatewayConfig,
    RemoteCompleter,
    StubCompleter,
    make_completer,
)
from .prompting import AssembledPrompt, ContextItem, PromptConfig, PromptMode, build
from .store import (
    MemoryRecord,
    MemoryStore,
    RetrievalResult,
    StoreStats,
)

__all__ = [
    "__version__",
    "AssembledPrompt",
    "AuthError",
    "BackendError",
    "BuiltinEmbedder",
    "ChatOutcome",
    "Chunk",
    "ChunkConfig",
    "CompletionRequest",
    "CompletionResult",
    "ContextItem",
    "DIMENSION",
    "EmbedderConfig",
    "Engine",
    "GatewayConfig",
    "JournalError",
    "MemragError",
    "MemoryRecord",
    "MemoryStore",
    "PromptConfig",
    "PromptMode",
    "RemoteCompleter",
    "RemoteEmbedder",
    "RetrievalResult",
    "StageTimings",
    "StoreStats",
    "StubCompleter",
    "ValidationError",
    "build",
    "cosine",
    "make_completer",
    "make_embedder",
    "make_records",
    "split",
]
