"""In-process PID service speaking the same wire protocol as the real thing.

The service is a plain WSGI application so it can be mounted behind an
in-process HTTP transport in tests or served on a real socket with
``wsgiref.simple_server``. Responses are serialized deterministically
(compact JSON, sorted keys) so wire tapes compare byte-exact.
"""

from __future__ import annotations

import base64
import json
import re
from threading import RLock

_HANDLE_PATH = re.compile(r"^/handles/(?P<prefix>[^/]+)/(?P<suffix>[^/]+)$")

_STATUS_LINES = {
    200: "200 OK",
    201: "201 Created",
    400: "400 Bad Request",
    401: "401 Unauthorized",
    404: "404 Not Found",
    405: "405 Method Not Allowed",
}


def _body(payload: dict) -> bytes:
    return json.dumps(payload, separators=(",", ":"), sort_keys=True).encode("utf-8")


def handle_body(target_url: str) -> bytes:
    """Canonical wire body for a handle record."""
    return _body({"values": [{"data": target_url, "type": "URL"}]})


class MockPidService:
    """Handle registry mock: an upsert PUT and a lookup GET per handle."""

    def __init__(self, username: str | None = None, password: str | None = None):
        self._handles: dict[tuple[str, str], str] = {}
        self._username = username
        self._password = password
        self._lock = RLock()

    # direct inspection helpers for tests and replay seeding
    def target_of(self, prefix: str, suffix: str) -> str | None:
        return self._handles.get((prefix, suffix))

    def known_handles(self) -> list[tuple[str, str]]:
        return sorted(self._handles)

    def _authorized(self, environ) -> bool:
        if self._username is None:
            return True
        header = environ.get("HTTP_AUTHORIZATION", "")
        if not header.startswith("Basic "):
            return False
        try:
            decoded = base64.b64decode(header[6:]).decode("utf-8")
        except Exception:
            return False
        return decoded == f"{self._username}:{self._password}"

    def handle_request(self, method: str, path: str, body: bytes) -> tuple[int, bytes]:
        """Transport-independent request handling; the WSGI layer wraps this."""
        match = _HANDLE_PATH.match(path)
        if not match:
            return 404, _body({"error": "unknown_route"})
        prefix, suffix = match.group("prefix"), match.group("suffix")
        if method == "GET":
            target = self._handles.get((prefix, suffix))
            if target is None:
                return 404, _body({"error": "unknown_handle"})
            return 200, handle_body(target)
        if method == "PUT":
            try:
                payload = json.loads(body.decode("utf-8"))
                values = payload["values"]
                target = next(v["data"] for v in values if v.get("type") == "URL")
            except (ValueError, KeyError, StopIteration, UnicodeDecodeError):
                return 400, _body({"error": "malformed_body"})
            with self._lock:
                created = (prefix, suffix) not in self._handles
                self._handles[(prefix, suffix)] = target
            return (201 if created else 200), handle_body(target)
        return 405, _body({"error": "method_not_allowed"})

    def __call__(self, environ, start_response):
        if not self._authorized(environ):
            status, body = 401, _body({"error": "unauthorized"})
        else:
            try:
                length = int(environ.get("CONTENT_LENGTH") or 0)
            except ValueError:
                length = 0
            raw = environ["wsgi.input"].read(length) if length else b""
            status, body = self.handle_request(environ["REQUEST_METHOD"], environ["PATH_INFO"], raw)
        start_response(
            _STATUS_LINES[status],
            [("Content-Type", "application/json"), ("Content-Length", str(len(body)))],
        )
        return [body]
