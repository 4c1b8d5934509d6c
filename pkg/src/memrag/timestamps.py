"""RFC 3339 timestamp handling used by the journal and prompt rendering."""

from __future__ import annotations

from datetime import datetime, timezone

from .errors import ValidationError


def ensure_utc(value: datetime) -> datetime:
    """Normalize to an aware UTC datetime. Naive datetimes are taken as UTC."""
    if value.tzinfo is None:
        return value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def format_rfc3339(value: datetime) -> str:
    """Canonical RFC 3339 form, e.g. ``2024-12-23T08:00:00Z``.

    Fractional seconds appear only when nonzero, so formatting round-trips
    byte-for-byte through ``parse_rfc3339``.
    """
    return ensure_utc(value).isoformat().replace("+00:00", "Z")


def parse_rfc3339(text: str) -> datetime:
    if not isinstance(text, str) or not text:
        raise ValidationError("timestamp must be a non-empty RFC 3339 string")
    candidate = text.replace("Z", "+00:00") if text.endswith("Z") else text
    try:
        parsed = datetime.fromisoformat(candidate)
    except ValueError as exc:
        raise ValidationError(f"invalid timestamp {text!r}: {exc}") from exc
    return ensure_utc(parsed)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)
