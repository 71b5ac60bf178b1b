"""Wire-level client for Handle-style PID service endpoints.

The protocol is two verbs on one resource:

    PUT /handles/{prefix}/{suffix}   body {"values":[{"type":"URL","data":<target>}]}
        -> 201 created, 200 updated
    GET /handles/{prefix}/{suffix}
        -> 200 with the same body shape, 404 when unknown

Endpoints are configured per object kind; the embedded mock service plugs in
through an in-process WSGI transport, an external service through its base
URL. A WireTape can record every exchange byte-exact and later replay it,
verifying the client reproduces the identical request stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import httpx

from ..errors import FairhubError


class ServiceUnreachable(FairhubError):
    code = "pid_service_unreachable"
    http_status = 502


class WireProtocolError(FairhubError):
    code = "pid_wire_protocol_error"
    http_status = 502


@dataclass
class Exchange:
    method: str
    path: str
    request_body: bytes
    status: int
    response_body: bytes


@dataclass
class WireTape:
    """Recorded request/response stream for record/replay testing."""

    exchanges: list[Exchange] = field(default_factory=list)

    def record(self, exchange: Exchange) -> None:
        self.exchanges.append(exchange)

    def __len__(self) -> int:
        return len(self.exchanges)


@dataclass
class EndpointConfig:
    """One PID service endpoint; ``wsgi_app`` set means in-process (embedded)."""

    name: str
    base_url: str
    prefix: str
    username: str | None = None
    password: str | None = None
    wsgi_app: object | None = None

    @property
    def embedded(self) -> bool:
        return self.wsgi_app is not None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base_url": self.base_url,
            "prefix": self.prefix,
            "username": self.username,
            "password": self.password,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EndpointConfig":
        return cls(
            name=d["name"],
            base_url=d["base_url"],
            prefix=d["prefix"],
            username=d.get("username"),
            password=d.get("password"),
        )


def request_body(target_url: str) -> bytes:
    return json.dumps(
        {"values": [{"data": target_url, "type": "URL"}]}, separators=(",", ":"), sort_keys=True
    ).encode("utf-8")


class PidServiceClient:
    """Speaks the handle wire protocol against one endpoint."""

    def __init__(
        self,
        endpoint: EndpointConfig,
        tape: WireTape | None = None,
        replay: WireTape | None = None,
    ):
        self.endpoint = endpoint
        self.tape = tape
        self._replay = list(replay.exchanges) if replay else None
        auth = (endpoint.username, endpoint.password) if endpoint.username else None
        transport = httpx.WSGITransport(app=endpoint.wsgi_app) if endpoint.embedded else None
        self._http = httpx.Client(base_url=endpoint.base_url, transport=transport, auth=auth)

    def close(self) -> None:
        self._http.close()

    def _send(self, method: str, path: str, body: bytes) -> tuple[int, bytes]:
        if self._replay is not None:
            if not self._replay:
                raise WireProtocolError("replay tape exhausted")
            expected = self._replay.pop(0)
            if (method, path, body) != (expected.method, expected.path, expected.request_body):
                raise WireProtocolError(
                    f"replayed request diverges from tape: {method} {path} != "
                    f"{expected.method} {expected.path}"
                )
            return expected.status, expected.response_body
        try:
            response = self._http.request(
                method, path, content=body or None,
                headers={"Content-Type": "application/json"} if body else None,
            )
        except httpx.HTTPError as exc:
            raise ServiceUnreachable(f"PID endpoint {self.endpoint.name}: {exc}") from exc
        if self.tape is not None:
            self.tape.record(Exchange(method, path, body, response.status_code, response.content))
        return response.status_code, response.content

    def register(self, prefix: str, suffix: str, target_url: str) -> bool:
        """Create or update a handle; returns True when newly created."""
        status, body = self._send("PUT", f"/handles/{prefix}/{suffix}", request_body(target_url))
        if status not in (200, 201):
            raise WireProtocolError(f"unexpected status {status} registering {prefix}/{suffix}")
        return status == 201

    def lookup(self, prefix: str, suffix: str) -> str | None:
        """Resolve a handle to its target URL; None when the service has no record."""
        status, body = self._send("GET", f"/handles/{prefix}/{suffix}", b"")
        if status == 404:
            return None
        if status != 200:
            raise WireProtocolError(f"unexpected status {status} resolving {prefix}/{suffix}")
        try:
            payload = json.loads(body.decode("utf-8"))
            return next(v["data"] for v in payload["values"] if v.get("type") == "URL")
        except (ValueError, KeyError, StopIteration, UnicodeDecodeError) as exc:
            raise WireProtocolError(f"malformed handle body for {prefix}/{suffix}") from exc


class EndpointRouter:
    """Maps object kinds to configured endpoints, with a default fallback."""

    def __init__(self):
        self._endpoints: dict[str, EndpointConfig] = {}
        self._assignments: dict[str, str] = {}
        self._default: str | None = None

    def add(self, endpoint: EndpointConfig, default: bool = False) -> None:
        self._endpoints[endpoint.name] = endpoint
        if default or self._default is None:
            self._default = endpoint.name

    def assign(self, object_kind: str, endpoint_name: str) -> None:
        if endpoint_name not in self._endpoints:
            raise FairhubError(f"no such endpoint: {endpoint_name}")
        self._assignments[str(object_kind)] = endpoint_name

    def endpoints(self) -> list[EndpointConfig]:
        return list(self._endpoints.values())

    def resolve(self, object_kind: str) -> EndpointConfig:
        name = self._assignments.get(str(object_kind), self._default)
        if name is None:
            raise FairhubError("no PID endpoint configured")
        return self._endpoints[name]

    def by_prefix(self, prefix: str) -> EndpointConfig | None:
        for endpoint in self._endpoints.values():
            if endpoint.prefix == prefix:
                return endpoint
        return None

    def export_state(self) -> dict:
        return {
            "endpoints": [e.to_dict() for e in self._endpoints.values() if not e.embedded],
            "assignments": dict(self._assignments),
            "default": self._default,
        }
