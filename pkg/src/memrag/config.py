"""Service configuration: JSON file plus MEMRAG_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .embedding import EmbedderConfig
from .errors import ValidationError
from .gateway import GatewayConfig


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8642
    journal_path: str | None = None
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    relevance_threshold: float = 0.35
    default_k: int = 3
    transcript_window: int = 4
    token_ttl_hours: float = 24.0

    def __post_init__(self) -> None:
        if not 1 <= self.port <= 65535:
            raise ValidationError(f"port must be in [1, 65535], got {self.port!r}")
        if self.token_ttl_hours <= 0:
            raise ValidationError("token_ttl_hours must be positive")


_ENV_PREFIX = "MEMRAG_"


def load_config(
    path: str | Path | None = None, env: Mapping[str, str] | None = None
) -> ServiceConfig:
    """Build a ServiceConfig from an optional JSON file and the environment.

    Environment variables win over the file; both win over defaults.
    """
    environ = os.environ if env is None else env
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ValidationError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError(f"config file {path} must hold a JSON object")

    def pick(key: str, default, cast):
        value = environ.get(_ENV_PREFIX + key.upper())
        if value is not None:
            try:
                return cast(value)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"bad value for {_ENV_PREFIX + key.upper()}: {value!r}") from exc
        if key in data:
            try:
                return cast(data[key])
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"bad config value for {key!r}: {data[key]!r}") from exc
        return default

    embedder_data = data.get("embedder", {})
    if not isinstance(embedder_data, dict):
        raise ValidationError("config key 'embedder' must be an object")
    gateway_data = data.get("gateway", {})
    if not isinstance(gateway_data, dict):
        raise ValidationError("config key 'gateway' must be an object")

    def nested(section: dict, env_section: str, key: str, default, cast):
        value = environ.get(f"{_ENV_PREFIX}{env_section}_{key.upper()}")
        if value is not None:
            return cast(value)
        if key in section:
            return cast(section[key])
        return default

    embedder = EmbedderConfig(
        backend=nested(embedder_data, "EMBEDDER", "backend", "builtin", str),
        endpoint_url=nested(embedder_data, "EMBEDDER", "endpoint_url", "", str),
        model_name=nested(embedder_data, "EMBEDDER", "model_name", EmbedderConfig.model_name, str),
        timeout=nested(embedder_data, "EMBEDDER", "timeout", 10.0, float),
    )
    gateway = GatewayConfig(
        backend=nested(gateway_data, "GATEWAY", "backend", "stub", str),
        endpoint_url=nested(gateway_data, "GATEWAY", "endpoint_url", "", str),
        model_name=nested(gateway_data, "GATEWAY", "model_name", GatewayConfig.model_name, str),
        api_key_header=nested(
            gateway_data, "GATEWAY", "api_key_header", GatewayConfig.api_key_header, str
        ),
        api_key_value=nested(gateway_data, "GATEWAY", "api_key_value", "", str),
        timeout=nested(gateway_data, "GATEWAY", "timeout", 30.0, float),
        retries=nested(gateway_data, "GATEWAY", "retries", 2, int),
        backoff_initial=nested(gateway_data, "GATEWAY", "backoff_initial", 0.25, float),
    )
    journal = pick("journal_path", None, str)
    return ServiceConfig(
        host=pick("host", "127.0.0.1", str),
        port=pick("port", 8642, int),
        journal_path=journal,
        embedder=embedder,
        gateway=gateway,
        relevance_threshold=pick("relevance_threshold", 0.35, float),
        default_k=pick("default_k", 3, int),
        transcript_window=pick("transcript_window", 4, int),
        token_ttl_hours=pick("token_ttl_hours", 24.0, float),
    )
