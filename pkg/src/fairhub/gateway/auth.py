"""Session handling for the HTTP gateway.

Tokens are 256-bit random strings handed out once; the store keeps only
their SHA-256 digests, so a leaked state snapshot never contains a
usable credential.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass
from datetime import datetime, timedelta
from threading import RLock

from ..core import Directory, UserProfile, utcnow
from ..errors import FairhubError

DEFAULT_TTL_SECONDS = 8 * 3600


class InvalidCredentials(FairhubError):
    code = "invalid_credentials"
    http_status = 401


class AuthRequired(FairhubError):
    code = "auth_required"
    http_status = 401


@dataclass
class SessionToken:
    token: str
    user_id: str
    issued_at: datetime
    expires_at: datetime


def _digest(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


class SessionStore:
    def __init__(self, ttl_seconds: int = DEFAULT_TTL_SECONDS):
        self.ttl_seconds = ttl_seconds
        self._sessions: dict[str, tuple[str, datetime]] = {}
        self._lock = RLock()

    def issue(self, user_id: str) -> SessionToken:
        token = secrets.token_urlsafe(32)
        now = utcnow()
        expires = now + timedelta(seconds=self.ttl_seconds)
        with self._lock:
            self._sessions[_digest(token)] = (user_id, expires)
        return SessionToken(
            token=token, user_id=user_id, issued_at=now, expires_at=expires
        )

    def resolve(self, token: str | None) -> str | None:
        """Map a presented token to a user id, or None when invalid/expired."""
        if not token:
            return None
        key = _digest(token)
        with self._lock:
            entry = self._sessions.get(key)
            if entry is None:
                return None
            user_id, expires = entry
            if utcnow() >= expires:
                del self._sessions[key]
                return None
            return user_id

    def revoke(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(_digest(token), None)

    def active_count(self) -> int:
        now = utcnow()
        with self._lock:
            return sum(1 for _, exp in self._sessions.values() if exp > now)


def login(
    directory: Directory,
    sessions: SessionStore,
    username_or_orcid: str,
    password: str,
) -> SessionToken:
    """Password login; unknown user and wrong password are indistinguishable.

    The dummy verification keeps the failure path as slow as a real
    check, so response timing does not reveal whether the account exists.
    """
    user: UserProfile | None = directory.find_by_orcid(username_or_orcid)
    if user is None:
        try:
            user = directory.get_user(username_or_orcid)
        except FairhubError:
            user = None
    if user is None or not user.active:
        directory.dummy_verify(password)
        raise InvalidCredentials("unknown account or wrong password")
    if not directory.verify_password(user, password):
        raise InvalidCredentials("unknown account or wrong password")
    return sessions.issue(user.user_id)
