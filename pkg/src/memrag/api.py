"""HTTP surface: a JSON REST API over :class:`~memrag.service.ServiceCore`.

Endpoints::

    POST   /v1/users      {username, password}        -> 201 {user_id}
    POST   /v1/sessions   {username, password}        -> 200 {token, user_id, expires_at}
    POST   /v1/memories   {text, timestamp?}          -> 201 {record_ids}
    GET    /v1/memories   ?query=&limit=              -> 200 {records}
    DELETE /v1/memories                               -> 200 {deleted}
    POST   /v1/chat       {query, k?}                 -> 200 {response_text, mode, retrieved, latency}
    GET    /v1/health                                 -> 200 {status}

All endpoints except user creation, login, and health require a
``Authorization: Bearer <token>`` header. Errors use one envelope:
``{"error": {"category": ..., "message": ...}}`` with categories
auth | validation | backend | internal.
"""

from __future__ import annotations

import logging

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .config import ServiceConfig
from .errors import AuthError, BackendError, MemragError, ValidationError
from .service import ServiceCore, build_service
from .timestamps import format_rfc3339, parse_rfc3339

logger = logging.getLogger(__name__)

_STATUS_BY_CATEGORY = {"auth": 401, "validation": 400, "backend": 502, "internal": 500}


class RegisterBody(BaseModel):
    username: str
    password: str


class IngestBody(BaseModel):
    text: str
    timestamp: str | None = None


class ChatBody(BaseModel):
    query: str
    k: int | None = Field(default=None)


def _error_response(category: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=_STATUS_BY_CATEGORY.get(category, 500),
        content={"error": {"category": category, "message": message}},
    )


def create_app(config: ServiceConfig | None = None, core: ServiceCore | None = None) -> FastAPI:
    """Build the FastAPI app. Pass ``core`` to reuse an existing service
    (tests); otherwise one is wired from ``config``."""
    service = core or build_service(config or ServiceConfig())
    app = FastAPI(title="memrag", version=__version__)
    app.state.core = service
    # Browser clients authenticate with bearer tokens, never cookies, so a
    # permissive CORS policy does not widen the attack surface.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def bearer_token(authorization: str | None = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise AuthError("missing bearer token")
        return authorization.removeprefix("Bearer ")

    @app.exception_handler(MemragError)
    async def on_memrag_error(request: Request, exc: MemragError) -> JSONResponse:
        if exc.category == "internal":
            logger.exception("internal error on %s: %s", request.url.path, exc)
        return _error_response(exc.category, str(exc))

    @app.exception_handler(RequestValidationError)
    async def on_request_validation(request: Request, exc: RequestValidationError) -> JSONResponse:
        return _error_response("validation", str(exc.errors()[:3]))

    @app.exception_handler(Exception)
    async def on_unexpected(request: Request, exc: Exception) -> JSONResponse:
        logger.exception("unhandled error on %s", request.url.path)
        return _error_response("internal", "internal server error")

    @app.post("/v1/users", status_code=201)
    def register(body: RegisterBody) -> dict:
        user_id = service.register(body.username, body.password)
        return {"user_id": user_id}

    @app.post("/v1/sessions")
    def login(body: RegisterBody) -> dict:
        session = service.login(body.username, body.password)
        return {
            "token": session.token,
            "user_id": session.user_id,
            "expires_at": format_rfc3339(session.expires_at),
        }

    @app.post("/v1/memories", status_code=201)
    def ingest(body: IngestBody, token: str = Depends(bearer_token)) -> dict:
        timestamp = parse_rfc3339(body.timestamp) if body.timestamp else None
        records = service.ingest_entry(token, body.text, timestamp=timestamp)
        return {"record_ids": [record.record_id for record in records]}

    @app.get("/v1/memories")
    def list_memories(
        token: str = Depends(bearer_token),
        query: str | None = Query(default=None),
        limit: int | None = Query(default=None),
    ) -> dict:
        rows = service.list_memories(token, query=query, limit=limit)
        return {
            "records": [
                {
                    "record_id": record.record_id,
                    "text": record.text,
                    "timestamp": format_rfc3339(record.timestamp),
                    "source_id": record.source_id,
                    "chunk_index": record.chunk_index,
                    "score": score,
                }
                for record, score in rows
            ]
        }

    @app.delete("/v1/memories")
    def delete_memories(token: str = Depends(bearer_token)) -> dict:
        return {"deleted": service.delete_memories(token)}

    @app.post("/v1/chat")
    def chat(body: ChatBody, token: str = Depends(bearer_token)) -> dict:
        outcome = service.chat(token, body.query, k=body.k)
        in_prompt = set(outcome.prompt_record_ids)
        return {
            "response_text": outcome.response_text,
            "mode": outcome.mode.value,
            "retrieved": [
                {
                    "record_id": result.record.record_id,
                    "score": result.score,
                    "text": result.record.text,
                    "timestamp": format_rfc3339(result.record.timestamp),
                    "in_prompt": result.record.record_id in in_prompt,
                }
                for result in outcome.results
            ],
            "latency": outcome.latency,
        }

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    return app
