"""Local PID catalogue, TAN pool, and minting logic.

The registry is the portal's authoritative list of every PID it ever minted.
Handles are registered at the configured service endpoint through the wire
client; the local record keeps object kind, creation time, and the optional
one-time TAN (stored salted-hashed, never in plaintext).

Mint and consume operations are linearizable: a single registry lock covers
suffix allocation, wire registration, and TAN state flips.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import secrets
import string
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from threading import RLock
from typing import Callable
from urllib.parse import urlparse

from ..core import utcnow
from ..errors import FairhubError, ValidationError
from .client import EndpointRouter, PidServiceClient, ServiceUnreachable, WireTape


class ObjectKind(str, Enum):
    ARTICLE = "article"
    ANTIBODY = "antibody"
    MOUSE_LINE = "mouse_line"
    CELL_LINE = "cell_line"
    NOTEBOOK = "notebook"
    DATASET = "dataset"
    LABEL_SET = "label_set"


class UnknownPid(FairhubError):
    code = "unknown_pid"
    http_status = 404


class PrefixNotConfigured(FairhubError):
    code = "prefix_not_configured"
    http_status = 400


class InvalidUrl(ValidationError):
    code = "invalid_url"


class TanMismatch(FairhubError):
    code = "tan_mismatch"
    http_status = 403


class TanAlreadyConsumed(FairhubError):
    code = "tan_already_consumed"
    http_status = 409


_SUFFIX_ALPHABET = string.ascii_lowercase + string.digits
_TAN_ALPHABET = string.ascii_uppercase + string.digits
SUFFIX_LENGTH = 12
TAN_LENGTH = 8


@dataclass
class PersistentIdentifier:
    prefix: str
    suffix: str
    target_url: str
    created_at: datetime
    object_kind: ObjectKind

    @property
    def pid(self) -> str:
        return f"{self.prefix}/{self.suffix}"

    def to_dict(self) -> dict:
        return {
            "prefix": self.prefix,
            "suffix": self.suffix,
            "pid": self.pid,
            "target_url": self.target_url,
            "created_at": self.created_at.isoformat(),
            "object_kind": self.object_kind.value,
        }


@dataclass
class TanEntry:
    """Salted hash of the one-time code; the plaintext never touches disk."""

    salt: str
    tan_hash: str
    consumed: bool = False
    consumed_by: str | None = None
    consumed_at: datetime | None = None

    def to_dict(self) -> dict:
        return {
            "consumed": self.consumed,
            "consumed_by": self.consumed_by,
            "consumed_at": self.consumed_at.isoformat() if self.consumed_at else None,
        }


def validate_target_url(url: str) -> str:
    parsed = urlparse(url or "")
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise InvalidUrl(f"target URL must be absolute http(s): {url!r}", fields=["target_url"])
    return url


def _tan_hash(salt: bytes, tan: str) -> str:
    return hashlib.sha256(salt + tan.encode("ascii")).hexdigest()


def _default_landing_url(prefix: str, suffix: str) -> str:
    return f"https://fairhub.local/landing/{prefix}/{suffix}"


class PidRegistry:
    def __init__(
        self,
        router: EndpointRouter,
        journal_path: str | Path | None = None,
        landing_url: Callable[[str, str], str] = _default_landing_url,
        tape: WireTape | None = None,
    ):
        self.router = router
        self.landing_url = landing_url
        self._records: dict[tuple[str, str], PersistentIdentifier] = {}
        self._tans: dict[tuple[str, str], TanEntry] = {}
        self._clients: dict[str, PidServiceClient] = {}
        self._tape = tape
        self._lock = RLock()
        self._journal_path = Path(journal_path) if journal_path else None
        self._journal_file = None
        if self._journal_path is not None:
            self._journal_path.parent.mkdir(parents=True, exist_ok=True)
            if self._journal_path.exists():
                self._replay_journal()
            self._journal_file = open(self._journal_path, "a", encoding="utf-8")

    # -- wiring --------------------------------------------------------

    def client_for(self, endpoint_name: str) -> PidServiceClient:
        client = self._clients.get(endpoint_name)
        if client is None:
            endpoint = next(e for e in self.router.endpoints() if e.name == endpoint_name)
            client = PidServiceClient(endpoint, tape=self._tape)
            self._clients[endpoint_name] = client
        return client

    def _client_for_prefix(self, prefix: str) -> PidServiceClient:
        endpoint = self.router.by_prefix(prefix)
        if endpoint is None:
            raise PrefixNotConfigured(f"no endpoint serves prefix {prefix!r}")
        return self.client_for(endpoint.name)

    # -- journal -------------------------------------------------------

    def _journal(self, record: dict) -> None:
        if self._journal_file is None:
            return
        self._journal_file.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._journal_file.flush()
        os.fsync(self._journal_file.fileno())

    def _replay_journal(self) -> None:
        seed: dict[tuple[str, str], str] = {}
        with open(self._journal_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                key = (rec["prefix"], rec["suffix"])
                op = rec["op"]
                if op == "mint":
                    self._records[key] = PersistentIdentifier(
                        prefix=rec["prefix"],
                        suffix=rec["suffix"],
                        target_url=rec["target_url"],
                        created_at=datetime.fromisoformat(rec["created_at"]),
                        object_kind=ObjectKind(rec["object_kind"]),
                    )
                    seed[key] = rec["target_url"]
                elif op == "update":
                    self._records[key].target_url = rec["target_url"]
                    seed[key] = rec["target_url"]
                elif op == "tan":
                    self._tans[key] = TanEntry(salt=rec["salt"], tan_hash=rec["hash"])
                elif op == "consume":
                    entry = self._tans[key]
                    entry.consumed = True
                    entry.consumed_by = rec["user_id"]
                    entry.consumed_at = datetime.fromisoformat(rec["at"])
        # embedded mock endpoints are process-local: re-register replayed handles
        for (prefix, suffix), target in seed.items():
            endpoint = self.router.by_prefix(prefix)
            if endpoint is not None and endpoint.embedded:
                self.client_for(endpoint.name).register(prefix, suffix, target)

    # -- minting -------------------------------------------------------

    def _new_suffix(self, prefix: str) -> str:
        while True:
            suffix = "".join(secrets.choice(_SUFFIX_ALPHABET) for _ in range(SUFFIX_LENGTH))
            if (prefix, suffix) not in self._records:
                return suffix

    def mint_pid(
        self,
        prefix: str,
        target_url: str | Callable[[str, str], str],
        object_kind: ObjectKind,
    ) -> PersistentIdentifier:
        """Allocate a fresh suffix under ``prefix`` and register the handle.

        ``target_url`` may be a callable ``(prefix, suffix) -> url`` for
        targets that embed the suffix itself, e.g. the PID's landing page.
        """
        kind = ObjectKind(object_kind)
        with self._lock:
            client = self._client_for_prefix(prefix)
            for _ in range(8):
                suffix = self._new_suffix(prefix)
                target = target_url(prefix, suffix) if callable(target_url) else target_url
                validate_target_url(target)
                # a 200 on first registration means the service already held
                # that suffix (foreign record): pick another, never overwrite
                if client.register(prefix, suffix, target):
                    break
            else:
                raise FairhubError(f"could not allocate a fresh suffix under {prefix}")
            record = PersistentIdentifier(
                prefix=prefix,
                suffix=suffix,
                target_url=target,
                created_at=utcnow(),
                object_kind=kind,
            )
            self._records[(prefix, suffix)] = record
            self._journal(
                {
                    "op": "mint",
                    "prefix": prefix,
                    "suffix": suffix,
                    "target_url": target,
                    "object_kind": kind.value,
                    "created_at": record.created_at.isoformat(),
                }
            )
            return record

    def mint_for_kind(
        self, object_kind: ObjectKind, target_url: str | Callable[[str, str], str]
    ) -> PersistentIdentifier:
        """Mint under whichever endpoint is assigned to this object kind."""
        endpoint = self.router.resolve(ObjectKind(object_kind).value)
        return self.mint_pid(endpoint.prefix, target_url, object_kind)

    def resolve_pid(self, prefix: str, suffix: str) -> PersistentIdentifier:
        record = self._records.get((prefix, suffix))
        if record is None:
            raise UnknownPid(f"unknown PID {prefix}/{suffix}")
        return record

    def update_target(self, prefix: str, suffix: str, new_url: str) -> PersistentIdentifier:
        validate_target_url(new_url)
        with self._lock:
            record = self.resolve_pid(prefix, suffix)
            if record.target_url == new_url:
                return record
            self._client_for_prefix(prefix).register(prefix, suffix, new_url)
            record.target_url = new_url
            self._journal({"op": "update", "prefix": prefix, "suffix": suffix, "target_url": new_url})
            return record

    # -- TAN pool ------------------------------------------------------

    def mint_tan_batch(
        self, prefix: str, count: int, object_kind: ObjectKind
    ) -> list[tuple[PersistentIdentifier, str]]:
        """Mint ``count`` PIDs, each paired with a fresh one-time code.

        The plaintext TAN is returned exactly once, for label printing;
        only its salted hash is stored.
        """
        if count < 1:
            raise ValidationError("count must be >= 1", fields=["count"])
        pairs: list[tuple[PersistentIdentifier, str]] = []
        with self._lock:
            for _ in range(count):
                # target is the PID's own landing page until an object claims it
                record = self.mint_pid(prefix, self.landing_url, object_kind)
                tan = "".join(secrets.choice(_TAN_ALPHABET) for _ in range(TAN_LENGTH))
                salt = secrets.token_bytes(16)
                self._tans[(record.prefix, record.suffix)] = TanEntry(
                    salt=salt.hex(), tan_hash=_tan_hash(salt, tan)
                )
                self._journal(
                    {
                        "op": "tan",
                        "prefix": record.prefix,
                        "suffix": record.suffix,
                        "salt": salt.hex(),
                        "hash": self._tans[(record.prefix, record.suffix)].tan_hash,
                    }
                )
                pairs.append((record, tan))
        return pairs

    def tan_entry(self, prefix: str, suffix: str) -> TanEntry | None:
        return self._tans.get((prefix, suffix))

    def consume_tan(self, prefix: str, suffix: str, tan_plaintext: str, user_id: str) -> TanEntry:
        with self._lock:
            if (prefix, suffix) not in self._records:
                raise UnknownPid(f"unknown PID {prefix}/{suffix}")
            entry = self._tans.get((prefix, suffix))
            if entry is None:
                raise UnknownPid(f"no TAN registered for {prefix}/{suffix}")
            if entry.consumed:
                raise TanAlreadyConsumed(f"TAN for {prefix}/{suffix} already used")
            presented = _tan_hash(bytes.fromhex(entry.salt), tan_plaintext or "")
            if not hmac.compare_digest(presented, entry.tan_hash):
                raise TanMismatch("TAN does not match")
            entry.consumed = True
            entry.consumed_by = user_id
            entry.consumed_at = utcnow()
            self._journal(
                {
                    "op": "consume",
                    "prefix": prefix,
                    "suffix": suffix,
                    "user_id": user_id,
                    "at": entry.consumed_at.isoformat(),
                }
            )
            return entry

    # -- queries -------------------------------------------------------

    def all_pids(self) -> list[PersistentIdentifier]:
        return list(self._records.values())

    def lookup_remote(self, prefix: str, suffix: str) -> str | None:
        """Ask the service endpoint what it currently resolves the PID to."""
        return self._client_for_prefix(prefix).lookup(prefix, suffix)

    def close(self) -> None:
        for client in self._clients.values():
            client.close()
        if self._journal_file is not None:
            self._journal_file.close()
            self._journal_file = None
