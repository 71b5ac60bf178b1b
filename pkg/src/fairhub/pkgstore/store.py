"""Transactional package store with content-addressed blobs and tiering.

Layout under the store root::

    journal.jsonl          append-only write-ahead record of every commit
    blobs/hot/<aa>/<sha>   file bytes, content-addressed per tier
    blobs/cold/<aa>/<sha>

A transaction stages its changes on a deep copy of the package, writes any
new blobs, appends one journal record, and only then swaps the staged copy
in.  Blobs are written before the journal record, so a journal entry always
points at bytes that exist on disk; orphaned blobs from an aborted commit
are harmless.

Recovery is a straight replay of the journal.  ``last_access_at`` is
volatile bookkeeping for the tier policy and is not journaled; after a
restart the access order degrades to journal order.
"""

from __future__ import annotations

import copy
import hashlib
import json
import mimetypes
import os
import re
import secrets
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from threading import RLock
from typing import Callable, Iterable

from ..core import AccessScope, Directory, utcnow
from ..errors import AccessDenied, FairhubError, ValidationError


class Tier(str, Enum):
    HOT = "hot"
    COLD = "cold"


class UnknownPackage(FairhubError):
    code = "unknown_package"
    http_status = 404


class UnknownFile(FairhubError):
    code = "unknown_file"
    http_status = 404


class PathViolation(ValidationError):
    code = "path_violation"


class ConcurrentConflict(FairhubError):
    code = "concurrent_conflict"
    http_status = 409


class ChecksumMismatch(FairhubError):
    code = "checksum_mismatch"
    http_status = 500


class StorageFull(FairhubError):
    code = "storage_full"
    http_status = 507


_DRIVE_RE = re.compile(r"^[A-Za-z]:")


def validate_file_name(name: str) -> str:
    """Reject anything but a clean relative slash-separated path."""
    if not name:
        raise PathViolation("file name must not be empty", fields=["name"])
    if "\\" in name or "\x00" in name:
        raise PathViolation(f"illegal character in file name: {name!r}", fields=["name"])
    if name.startswith("/") or _DRIVE_RE.match(name):
        raise PathViolation(f"file name must be relative: {name!r}", fields=["name"])
    for segment in name.split("/"):
        if segment in ("", ".", ".."):
            raise PathViolation(f"illegal path segment in {name!r}", fields=["name"])
    return name


# -- mutations ---------------------------------------------------------


@dataclass(frozen=True)
class PutFile:
    name: str
    data: bytes
    file_metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DeleteFile:
    name: str


@dataclass(frozen=True)
class SetPackageMetadata:
    metadata: dict


@dataclass(frozen=True)
class SetFileMetadata:
    name: str
    metadata: dict


Mutation = PutFile | DeleteFile | SetPackageMetadata | SetFileMetadata


# -- state -------------------------------------------------------------


@dataclass
class StoredFile:
    name: str
    size_bytes: int
    checksum_sha256: str
    media_type_hint: str
    file_metadata: dict
    tier: Tier = Tier.HOT
    last_access_at: datetime = field(default_factory=utcnow)
    access_seq: int = 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "size_bytes": self.size_bytes,
            "checksum_sha256": self.checksum_sha256,
            "media_type_hint": self.media_type_hint,
            "file_metadata": dict(self.file_metadata),
            "tier": self.tier.value,
            "last_access_at": self.last_access_at.isoformat(),
        }


@dataclass
class Package:
    package_id: str
    acl: AccessScope
    package_metadata: dict = field(default_factory=dict)
    files: dict[str, StoredFile] = field(default_factory=dict)
    created_at: datetime = field(default_factory=utcnow)
    modified_at: datetime = field(default_factory=utcnow)
    revision: int = 0
    extra_readers: set[str] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "package_id": self.package_id,
            "acl": self.acl.to_dict(),
            "package_metadata": dict(self.package_metadata),
            "files": {name: f.to_dict() for name, f in sorted(self.files.items())},
            "created_at": self.created_at.isoformat(),
            "modified_at": self.modified_at.isoformat(),
            "revision": self.revision,
            "extra_readers": sorted(self.extra_readers),
        }


@dataclass
class MigrationReport:
    moved: list[tuple[str, str, int]] = field(default_factory=list)
    hot_bytes_before: int = 0
    hot_bytes_after: int = 0
    residual_overflow: bool = False

    def to_dict(self) -> dict:
        return {
            "moved": [
                {"package_id": p, "name": n, "size_bytes": s} for p, n, s in self.moved
            ],
            "hot_bytes_before": self.hot_bytes_before,
            "hot_bytes_after": self.hot_bytes_after,
            "residual_overflow": self.residual_overflow,
        }


class PackageStore:
    """Durable store of transactional file packages.

    ``directory`` supplies the access rules; pass None for a trusted
    embedded store that skips permission checks (tests, tooling).
    ``sync=False`` trades fsync-per-commit for speed where simulated
    crashes never lose the page cache.
    """

    def __init__(
        self,
        root: str | Path,
        directory: Directory | None = None,
        sync: bool = True,
        capacity_bytes: int | None = None,
    ):
        self.root = Path(root)
        self.directory = directory
        self.sync = sync
        self.capacity_bytes = capacity_bytes
        self._packages: dict[str, Package] = {}
        self._lock = RLock()
        self._access_seq = 0
        self._stored_bytes = 0
        self.root.mkdir(parents=True, exist_ok=True)
        for tier in Tier:
            (self.root / "blobs" / tier.value).mkdir(parents=True, exist_ok=True)
        self._journal_path = self.root / "journal.jsonl"
        if self._journal_path.exists():
            self._replay_journal()
        self._journal_file = open(self._journal_path, "a", encoding="utf-8")

    # -- blob layer ----------------------------------------------------

    def _blob_path(self, tier: Tier, sha: str) -> Path:
        return self.root / "blobs" / tier.value / sha[:2] / sha

    def _write_blob(self, tier: Tier, sha: str, data: bytes) -> None:
        path = self._blob_path(tier, sha)
        if path.exists():
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.parent / f".{sha}.{secrets.token_hex(4)}.tmp"
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            if self.sync:
                os.fsync(fh.fileno())
        os.replace(tmp, path)

    def _read_blob(self, tier: Tier, sha: str) -> bytes:
        path = self._blob_path(tier, sha)
        if not path.exists():
            raise ChecksumMismatch(f"blob {sha} missing from {tier.value} tier")
        return path.read_bytes()

    def _blob_referenced(self, tier: Tier, sha: str) -> bool:
        return any(
            f.tier is tier and f.checksum_sha256 == sha
            for pkg in self._packages.values()
            for f in pkg.files.values()
        )

    # -- journal -------------------------------------------------------

    def _append_journal(self, record: dict) -> None:
        self._journal_file.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._journal_file.flush()
        if self.sync:
            os.fsync(self._journal_file.fileno())

    def _replay_journal(self) -> None:
        with open(self._journal_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    self._apply_journal_record(json.loads(line))
        self._stored_bytes = sum(
            f.size_bytes for pkg in self._packages.values() for f in pkg.files.values()
        )

    def _apply_journal_record(self, rec: dict) -> None:
        op = rec["op"]
        if op == "create":
            pkg = Package(
                package_id=rec["package_id"],
                acl=AccessScope.from_dict(rec["acl"]),
                created_at=datetime.fromisoformat(rec["at"]),
                modified_at=datetime.fromisoformat(rec["at"]),
            )
            self._packages[pkg.package_id] = pkg
        elif op == "txn":
            pkg = self._packages[rec["package_id"]]
            at = datetime.fromisoformat(rec["at"])
            for mut in rec["mutations"]:
                kind = mut["kind"]
                if kind == "put":
                    self._access_seq += 1
                    pkg.files[mut["name"]] = StoredFile(
                        name=mut["name"],
                        size_bytes=mut["size_bytes"],
                        checksum_sha256=mut["sha256"],
                        media_type_hint=mut["media_type_hint"],
                        file_metadata=mut["file_metadata"],
                        tier=Tier(mut["tier"]),
                        last_access_at=at,
                        access_seq=self._access_seq,
                    )
                elif kind == "delete":
                    del pkg.files[mut["name"]]
                elif kind == "pkg_meta":
                    pkg.package_metadata = dict(mut["metadata"])
                elif kind == "file_meta":
                    pkg.files[mut["name"]].file_metadata = dict(mut["metadata"])
            pkg.revision = rec["revision"]
            pkg.modified_at = at
        elif op == "tier":
            for move in rec["moves"]:
                self._packages[move["package_id"]].files[move["name"]].tier = Tier(
                    move["tier"]
                )
        elif op == "grant":
            self._packages[rec["package_id"]].extra_readers.add(rec["user_id"])

    # -- access checks -------------------------------------------------

    def _can_read(self, requester: str | None, pkg: Package) -> bool:
        if requester is not None and requester in pkg.extra_readers:
            return True
        if self.directory is None:
            return True
        return self.directory.can_access(requester, pkg.acl)

    def can_read(self, package_id: str, requester: str | None) -> bool:
        return self._can_read(requester, self._get(package_id))

    def _check_read(self, requester: str | None, pkg: Package) -> None:
        if not self._can_read(requester, pkg):
            raise AccessDenied(f"no read access to package {pkg.package_id}")

    def _check_write(self, requester: str | None, pkg: Package) -> None:
        if self.directory is None:
            return
        if not self.directory.can_write(requester, pkg.acl):
            raise AccessDenied(f"no write access to package {pkg.package_id}")

    # -- operations ----------------------------------------------------

    def create_package(self, acl: AccessScope, package_metadata: dict | None = None) -> Package:
        acl.validate()
        with self._lock:
            pkg = Package(
                package_id=f"pkg_{uuid.uuid4().hex}",
                acl=acl,
                package_metadata=dict(package_metadata or {}),
            )
            self._append_journal(
                {
                    "op": "create",
                    "package_id": pkg.package_id,
                    "acl": acl.to_dict(),
                    "at": pkg.created_at.isoformat(),
                }
            )
            self._packages[pkg.package_id] = pkg
            return pkg

    def _get(self, package_id: str) -> Package:
        pkg = self._packages.get(package_id)
        if pkg is None:
            raise UnknownPackage(f"unknown package {package_id}")
        return pkg

    def run_transaction(
        self,
        package_id: str,
        mutations: Iterable[Mutation],
        actor: str | None = None,
        expected_revision: int | None = None,
        fault_hook: Callable[[str], None] | None = None,
    ) -> Package:
        """Apply ``mutations`` in order, all or nothing.

        ``expected_revision`` enables compare-and-set retries; a stale
        value raises ConcurrentConflict and changes nothing.
        ``fault_hook`` is test-only crash injection: it is called at the
        named commit stages and any exception it raises aborts commit at
        exactly that point.  After an after-journal fault the in-memory
        state is stale; reopen the store to recover.
        """
        mutations = list(mutations)
        with self._lock:
            pkg = self._get(package_id)
            self._check_write(actor, pkg)
            if expected_revision is not None and expected_revision != pkg.revision:
                raise ConcurrentConflict(
                    f"package {package_id} is at revision {pkg.revision}, "
                    f"transaction based on {expected_revision}"
                )
            staged = copy.deepcopy(pkg)
            now = utcnow()
            journal_muts: list[dict] = []
            blob_writes: list[tuple[str, bytes]] = []
            new_bytes = 0
            for index, mut in enumerate(mutations):
                if fault_hook is not None:
                    fault_hook(f"apply:{index}")
                if isinstance(mut, PutFile):
                    validate_file_name(mut.name)
                    sha = hashlib.sha256(mut.data).hexdigest()
                    replaced = staged.files.get(mut.name)
                    new_bytes += len(mut.data) - (replaced.size_bytes if replaced else 0)
                    self._access_seq += 1
                    staged.files[mut.name] = StoredFile(
                        name=mut.name,
                        size_bytes=len(mut.data),
                        checksum_sha256=sha,
                        media_type_hint=mimetypes.guess_type(mut.name)[0] or "application/octet-stream",
                        file_metadata=dict(mut.file_metadata),
                        tier=Tier.HOT,
                        last_access_at=now,
                        access_seq=self._access_seq,
                    )
                    blob_writes.append((sha, mut.data))
                    journal_muts.append(
                        {
                            "kind": "put",
                            "name": mut.name,
                            "sha256": sha,
                            "size_bytes": len(mut.data),
                            "media_type_hint": staged.files[mut.name].media_type_hint,
                            "file_metadata": dict(mut.file_metadata),
                            "tier": Tier.HOT.value,
                        }
                    )
                elif isinstance(mut, DeleteFile):
                    if mut.name not in staged.files:
                        raise UnknownFile(f"cannot delete missing file {mut.name!r}")
                    new_bytes -= staged.files[mut.name].size_bytes
                    del staged.files[mut.name]
                    journal_muts.append({"kind": "delete", "name": mut.name})
                elif isinstance(mut, SetPackageMetadata):
                    staged.package_metadata = dict(mut.metadata)
                    journal_muts.append({"kind": "pkg_meta", "metadata": dict(mut.metadata)})
                elif isinstance(mut, SetFileMetadata):
                    if mut.name not in staged.files:
                        raise UnknownFile(f"cannot set metadata on missing file {mut.name!r}")
                    staged.files[mut.name].file_metadata = dict(mut.metadata)
                    journal_muts.append(
                        {"kind": "file_meta", "name": mut.name, "metadata": dict(mut.metadata)}
                    )
                else:
                    raise ValidationError(f"unsupported mutation {type(mut).__name__}")
            if (
                self.capacity_bytes is not None
                and self._stored_bytes + new_bytes > self.capacity_bytes
            ):
                raise StorageFull(
                    f"store capacity {self.capacity_bytes} bytes would be exceeded"
                )
            staged.revision = pkg.revision + 1
            staged.modified_at = now
            if fault_hook is not None:
                fault_hook("before_blobs")
            for sha, data in blob_writes:
                self._write_blob(Tier.HOT, sha, data)
            if fault_hook is not None:
                fault_hook("before_journal")
            self._append_journal(
                {
                    "op": "txn",
                    "package_id": package_id,
                    "revision": staged.revision,
                    "at": now.isoformat(),
                    "mutations": journal_muts,
                }
            )
            if fault_hook is not None:
                fault_hook("after_journal")
            self._packages[package_id] = staged
            self._stored_bytes += new_bytes
            return staged

    def get_file(
        self, package_id: str, name: str, requester: str | None = None
    ) -> tuple[bytes, StoredFile]:
        with self._lock:
            pkg = self._get(package_id)
            self._check_read(requester, pkg)
            entry = pkg.files.get(name)
            if entry is None:
                raise UnknownFile(f"no file {name!r} in package {package_id}")
            data = self._read_blob(entry.tier, entry.checksum_sha256)
            actual = hashlib.sha256(data).hexdigest()
            if actual != entry.checksum_sha256:
                raise ChecksumMismatch(
                    f"file {name!r}: stored bytes hash to {actual}, "
                    f"catalogue says {entry.checksum_sha256}"
                )
            self._access_seq += 1
            entry.access_seq = self._access_seq
            entry.last_access_at = utcnow()
            return data, entry

    def list_package(self, package_id: str, requester: str | None = None) -> dict:
        with self._lock:
            pkg = self._get(package_id)
            self._check_read(requester, pkg)
            return pkg.to_dict()

    def grant_read(self, package_id: str, user_id: str, actor: str | None = None) -> None:
        """Add a named extra reader, e.g. an external review assignee."""
        with self._lock:
            pkg = self._get(package_id)
            if self.directory is not None and not (
                self.directory.can_write(actor, pkg.acl)
                or self.directory.is_facility_staff(actor)
            ):
                raise AccessDenied(f"no authority to grant access on {package_id}")
            if user_id in pkg.extra_readers:
                return
            self._append_journal({"op": "grant", "package_id": package_id, "user_id": user_id})
            pkg.extra_readers.add(user_id)

    # -- tiering -------------------------------------------------------

    def hot_bytes(self) -> int:
        return sum(
            f.size_bytes
            for pkg in self._packages.values()
            for f in pkg.files.values()
            if f.tier is Tier.HOT
        )

    def migrate_tiers(
        self, hot_capacity_bytes: int, min_candidate_size_bytes: int = 0
    ) -> MigrationReport:
        """Demote least-recently-accessed large Hot files until under capacity.

        Files below the candidate size are never demoted; if they alone
        keep usage above capacity the report flags residual overflow.
        """
        if hot_capacity_bytes < 0 or min_candidate_size_bytes < 0:
            raise ValidationError("policy values must be >= 0")
        with self._lock:
            report = MigrationReport(hot_bytes_before=self.hot_bytes())
            usage = report.hot_bytes_before
            candidates = sorted(
                (
                    (f.access_seq, pkg.package_id, f.name, f)
                    for pkg in self._packages.values()
                    for f in pkg.files.values()
                    if f.tier is Tier.HOT and f.size_bytes >= min_candidate_size_bytes
                ),
                key=lambda item: (item[0], item[1], item[2]),
            )
            moves: list[dict] = []
            demoted: list[StoredFile] = []
            for _, package_id, name, entry in candidates:
                if usage <= hot_capacity_bytes:
                    break
                sha = entry.checksum_sha256
                data = self._read_blob(Tier.HOT, sha)
                if hashlib.sha256(data).hexdigest() != sha:
                    raise ChecksumMismatch(f"refusing to migrate corrupt blob {sha}")
                self._write_blob(Tier.COLD, sha, data)
                copied = self._read_blob(Tier.COLD, sha)
                if hashlib.sha256(copied).hexdigest() != sha:
                    raise ChecksumMismatch(f"cold copy of {sha} failed verification")
                usage -= entry.size_bytes
                moves.append({"package_id": package_id, "name": name, "tier": Tier.COLD.value})
                report.moved.append((package_id, name, entry.size_bytes))
                demoted.append(entry)
            # journal first: a crash before this line leaves extra cold
            # copies but an untouched catalogue; after it, replay lands on
            # cold and the hot originals become deletable garbage
            if moves:
                self._append_journal({"op": "tier", "moves": moves})
            for entry in demoted:
                entry.tier = Tier.COLD
            for entry in demoted:
                if not self._blob_referenced(Tier.HOT, entry.checksum_sha256):
                    self._blob_path(Tier.HOT, entry.checksum_sha256).unlink(missing_ok=True)
            report.hot_bytes_after = usage
            report.residual_overflow = usage > hot_capacity_bytes
            return report

    # -- introspection -------------------------------------------------

    def packages(self) -> list[Package]:
        return list(self._packages.values())

    def get_package(self, package_id: str) -> Package:
        return self._get(package_id)

    def close(self) -> None:
        self._journal_file.close()
