"""Exception hierarchy shared across the library and the HTTP service.

Every error carries a stable ``category`` used verbatim in API error bodies.
"""

from __future__ import annotations


class MemragError(Exception):
    """Base class for all errors raised by this package."""

    category = "internal"


class ValidationError(MemragError):
    """Caller supplied invalid input (bad text, bad config, bad range)."""

    category = "validation"


class AuthError(MemragError):
    """Missing, expired, or otherwise unusable credentials."""

    category = "auth"


class BackendError(MemragError):
    """A remote embedding or completion backend failed.

    ``reason`` narrows the failure: "timeout", "transport", "status",
    "protocol", or "dimension".
    """

    category = "backend"

    def __init__(self, message: str, reason: str = "transport"):
        super().__init__(message)
        self.reason = reason


class JournalError(MemragError):
    """The persistence journal is unreadable or corrupt."""

    category = "internal"

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number
