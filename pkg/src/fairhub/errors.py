"""Shared error taxonomy.

Every error carries a stable machine-readable ``code`` and the HTTP status
the gateway maps it to. Module-specific errors subclass FairhubError next
to the code that raises them.
"""

from __future__ import annotations


class FairhubError(Exception):
    """Base class for all domain errors."""

    code = "error"
    http_status = 400

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


class ValidationError(FairhubError):
    """Input rejected; ``fields`` names the offending attributes."""

    code = "validation_error"
    http_status = 400

    def __init__(self, message: str = "", fields: list[str] | None = None):
        super().__init__(message)
        self.fields = list(fields or [])

    def to_dict(self) -> dict:
        d = super().to_dict()
        if self.fields:
            d["fields"] = self.fields
        return d


class AccessDenied(FairhubError):
    code = "access_denied"
    http_status = 403


def parse_enum(enum_cls, value, field: str):
    """Convert user input to an enum member, mapping failure to ValidationError."""
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(repr(m.value) for m in enum_cls)
        raise ValidationError(
            f"{field} must be one of {allowed}, got {value!r}", fields=[field]
        )
