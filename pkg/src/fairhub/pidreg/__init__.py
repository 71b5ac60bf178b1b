"""Handle-compatible persistent identifier registry.

A wire-level client (client.py) talks to a PID service endpoint; the
embedded mock (mock_service.py) serves the same protocol in-process so the
whole portal runs without network access. registry.py keeps the local
catalogue of minted PIDs and the one-time TAN pool for physical labels.
"""

from .client import EndpointConfig, EndpointRouter, PidServiceClient, WireTape
from .mock_service import MockPidService
from .registry import (
    ObjectKind,
    PersistentIdentifier,
    PidRegistry,
    PrefixNotConfigured,
    ServiceUnreachable,
    TanAlreadyConsumed,
    TanMismatch,
    UnknownPid,
)

__all__ = [
    "EndpointConfig",
    "EndpointRouter",
    "MockPidService",
    "ObjectKind",
    "PersistentIdentifier",
    "PidRegistry",
    "PidServiceClient",
    "PrefixNotConfigured",
    "ServiceUnreachable",
    "TanAlreadyConsumed",
    "TanMismatch",
    "UnknownPid",
    "WireTape",
]
