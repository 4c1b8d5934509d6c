"""Multi-tenant service core: accounts, sessions, transcripts, and the
authenticated operations the HTTP API and CLI expose.

Passwords are stored as salted PBKDF2-SHA256 digests (32768 iterations,
16-byte random salt) and compared in constant time; plaintext never
persists. Session tokens carry 256 bits of entropy and expire after a
configurable TTL. Memories persist through the store journal: ingests
append, deletes compact.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable

from .config import ServiceConfig
from .engine import ChatOutcome, Engine
from .errors import AuthError, ValidationError
from .gateway import make_completer
from .embedding import make_embedder
from .prompting import PromptConfig
from .store import MemoryRecord, MemoryStore
from .timestamps import ensure_utc, utc_now

PBKDF2_ITERATIONS = 1 << 15
SALT_BYTES = 16
TOKEN_BYTES = 32
MIN_PASSWORD_LENGTH = 8
MAX_USERNAME_LENGTH = 64

_DUMMY_SALT = b"\x00" * SALT_BYTES


def _digest(password: str, salt: bytes) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, PBKDF2_ITERATIONS)


@dataclass
class UserAccount:
    user_id: str
    username: str
    password_salt: bytes
    password_digest: bytes
    created_at: datetime


@dataclass(frozen=True)
class SessionToken:
    token: str
    user_id: str
    expires_at: datetime


@dataclass(frozen=True)
class ChatTurn:
    role: str  # "user" | "assistant"
    text: str
    timestamp: datetime
    retrieved_record_ids: tuple[str, ...] = ()


class ServiceCore:
    """Authenticated operations over one engine, isolated per tenant."""

    def __init__(
        self,
        engine: Engine | None = None,
        journal_path: str | Path | None = None,
        token_ttl: timedelta = timedelta(hours=24),
        now: Callable[[], datetime] = utc_now,
    ):
        self.engine = engine or Engine()
        self.store: MemoryStore = self.engine.store
        self._journal_path = Path(journal_path) if journal_path else None
        self._token_ttl = token_ttl
        self._now = now
        self._accounts: dict[str, UserAccount] = {}  # username -> account
        self._tokens: dict[str, SessionToken] = {}
        self._transcripts: dict[str, list[ChatTurn]] = {}  # token -> turns
        self._lock = threading.RLock()
        if self._journal_path and self._journal_path.exists():
            self.store.load_journal(self._journal_path)

    # ── accounts and sessions ─────────────────────────────────────

    def register(self, username: str, password: str) -> str:
        if not isinstance(username, str) or not username.strip():
            raise ValidationError("username must be non-empty")
        username = username.strip()
        if len(username) > MAX_USERNAME_LENGTH:
            raise ValidationError(f"username longer than {MAX_USERNAME_LENGTH} characters")
        if not isinstance(password, str) or len(password) < MIN_PASSWORD_LENGTH:
            raise ValidationError(f"password must be at least {MIN_PASSWORD_LENGTH} characters")
        salt = secrets.token_bytes(SALT_BYTES)
        account = UserAccount(
            user_id=uuid.uuid4().hex,
            username=username,
            password_salt=salt,
            password_digest=_digest(password, salt),
            created_at=self._now(),
        )
        with self._lock:
            if username in self._accounts:
                raise ValidationError(f"username {username!r} is already taken")
            self._accounts[username] = account
        return account.user_id

    def login(self, username: str, password: str) -> SessionToken:
        with self._lock:
            account = self._accounts.get(username if isinstance(username, str) else "")
        if account is None:
            # Burn the same hashing cost for unknown users: no timing oracle.
            _digest(password if isinstance(password, str) else "", _DUMMY_SALT)
            raise AuthError("invalid credentials")
        candidate = _digest(password, account.password_salt)
        if not hmac.compare_digest(candidate, account.password_digest):
            raise AuthError("invalid credentials")
        session = SessionToken(
            token=secrets.token_urlsafe(TOKEN_BYTES),
            user_id=account.user_id,
            expires_at=self._now() + self._token_ttl,
        )
        with self._lock:
            self._tokens[session.token] = session
            self._transcripts[session.token] = []
        return session

    def authenticate(self, token: str | None) -> str:
        """Resolve a bearer token to a user_id or raise ``AuthError``."""
        if not token:
            raise AuthError("missing session token")
        with self._lock:
            session = self._tokens.get(token)
            if session is None:
                raise AuthError("invalid session token")
            if self._now() >= session.expires_at:
                del self._tokens[token]
                self._transcripts.pop(token, None)
                raise AuthError("session token expired")
        return session.user_id

    # ── memory operations ─────────────────────────────────────────

    def ingest_entry(
        self, token: str, text: str, timestamp: datetime | None = None
    ) -> list[MemoryRecord]:
        user_id = self.authenticate(token)
        records = self.engine.ingest(user_id, text, timestamp=timestamp)
        if self._journal_path:
            self.store.append_journal(self._journal_path, records)
        return records

    def chat(self, token: str, query: str, k: int | None = None) -> ChatOutcome:
        user_id = self.authenticate(token)
        with self._lock:
            turns = list(self._transcripts.get(token, ()))
        transcript = [(turn.role, turn.text) for turn in turns]
        outcome = self.engine.answer(user_id, query, k=k, transcript=transcript)
        now = self._now()
        with self._lock:
            history = self._transcripts.setdefault(token, [])
            history.append(ChatTurn(role="user", text=query, timestamp=now))
            history.append(
                ChatTurn(
                    role="assistant",
                    text=outcome.response_text,
                    timestamp=now,
                    retrieved_record_ids=tuple(outcome.prompt_record_ids),
                )
            )
        return outcome

    def list_memories(
        self, token: str, query: str | None = None, limit: int | None = None
    ) -> list[tuple[MemoryRecord, float | None]]:
        """A user's records, newest first, or ranked like top_k when a query
        is given. ``limit`` truncates the result."""
        user_id = self.authenticate(token)
        if limit is not None and (not isinstance(limit, int) or limit < 1):
            raise ValidationError(f"limit must be a positive integer, got {limit!r}")
        if query is not None and query.strip():
            query_vector = self.engine.embedder.embed(query)
            ranked = self.store.rank(user_id, query_vector)
            rows = [(result.record, result.score) for result in ranked]
        else:
            rows = [(record, None) for record in self.store.records_for(user_id)]
        return rows[:limit] if limit is not None else rows

    def delete_memories(self, token: str) -> int:
        user_id = self.authenticate(token)
        removed = self.store.erase_user(user_id)
        if self._journal_path:
            # Explicit save compacts the journal so erased rows are gone.
            self.store.save_journal(self._journal_path)
        return removed

    def transcript(self, token: str) -> list[ChatTurn]:
        self.authenticate(token)
        with self._lock:
            return list(self._transcripts.get(token, ()))

    def close(self) -> None:
        self.engine.embedder.close()
        self.engine.completer.close()


def build_service(config: ServiceConfig) -> ServiceCore:
    """Wire a ServiceCore from configuration."""
    engine = Engine(
        store=MemoryStore(),
        embedder=make_embedder(config.embedder),
        completer=make_completer(config.gateway),
        prompt_config=PromptConfig(
            relevance_threshold=config.relevance_threshold,
            transcript_window_size=config.transcript_window,
        ),
        default_k=config.default_k,
        model_name=config.gateway.model_name,
    )
    return ServiceCore(
        engine=engine,
        journal_path=config.journal_path,
        token_ttl=timedelta(hours=config.token_ttl_hours),
    )
