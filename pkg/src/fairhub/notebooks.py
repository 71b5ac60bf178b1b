"""Lab notebook registry: physical books bound to PIDs via one-time codes.

A notebook comes into existence only by consuming the TAN of a
pre-minted PID, which is what guarantees each barcode sticker is applied
to exactly one physical book.  Scans are plain files in a lazily created
storage package that inherits the notebook's access scope.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date
from threading import RLock
from typing import Callable

from .core import AccessScope, Directory, Scope
from .core import new_id
from .errors import AccessDenied, FairhubError, ValidationError
from .pidreg.registry import PersistentIdentifier, PidRegistry
from .pkgstore import PackageStore, PutFile, StoredFile


class PidAlreadyBound(FairhubError):
    code = "pid_already_bound"
    http_status = 409


class UnknownNotebook(FairhubError):
    code = "unknown_notebook"
    http_status = 404


@dataclass
class NotebookRecord:
    notebook_id: str
    pid: str
    owner_user_id: str
    group_id: str
    title: str
    storage_location: str = ""
    date_from: date | None = None
    date_to: date | None = None
    scan_package: str | None = None
    acl: AccessScope = field(default_factory=lambda: AccessScope(Scope.PROJECT))

    def to_dict(self) -> dict:
        return {
            "notebook_id": self.notebook_id,
            "pid": self.pid,
            "owner_user_id": self.owner_user_id,
            "group_id": self.group_id,
            "title": self.title,
            "storage_location": self.storage_location,
            "date_from": self.date_from.isoformat() if self.date_from else None,
            "date_to": self.date_to.isoformat() if self.date_to else None,
            "scan_package": self.scan_package,
            "acl": self.acl.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NotebookRecord":
        return cls(
            notebook_id=data["notebook_id"],
            pid=data["pid"],
            owner_user_id=data["owner_user_id"],
            group_id=data["group_id"],
            title=data["title"],
            storage_location=data.get("storage_location", ""),
            date_from=date.fromisoformat(data["date_from"]) if data.get("date_from") else None,
            date_to=date.fromisoformat(data["date_to"]) if data.get("date_to") else None,
            scan_package=data.get("scan_package"),
            acl=AccessScope.from_dict(data["acl"]),
        )


def tan_manifest_csv(pairs: list[tuple[PersistentIdentifier, str]]) -> bytes:
    """Printable batch manifest; the only artifact carrying TAN plaintext."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(["pid", "tan"])
    for record, tan in pairs:
        writer.writerow([record.pid, tan])
    return buffer.getvalue().encode("utf-8")


class NotebookRegistry:
    def __init__(
        self,
        directory: Directory,
        pid_registry: PidRegistry,
        package_store: PackageStore,
        landing_url: Callable[[str, str], str] | None = None,
    ):
        self.directory = directory
        self.pid_registry = pid_registry
        self.package_store = package_store
        self.landing_url = landing_url or pid_registry.landing_url
        self._notebooks: dict[str, NotebookRecord] = {}
        self._lock = RLock()

    def register_notebook(
        self,
        prefix: str,
        suffix: str,
        tan: str,
        owner_user_id: str,
        group_id: str,
        title: str,
        storage_location: str = "",
        date_from: date | None = None,
        date_to: date | None = None,
        acl: AccessScope | None = None,
    ) -> NotebookRecord:
        if not (title or "").strip():
            raise ValidationError("title must not be empty", fields=["title"])
        if date_from and date_to and date_from > date_to:
            raise ValidationError("date range is inverted", fields=["date_from", "date_to"])
        if not self.directory.is_authenticated(owner_user_id):
            raise AccessDenied("registration requires an active account")
        self.directory.get_group(group_id)
        pid = f"{prefix}/{suffix}"
        acl = acl or AccessScope(Scope.GROUP, owner_user_id, group_id)
        acl.validate()
        with self._lock:
            if self.find_by_pid(pid) is not None:
                raise PidAlreadyBound(f"PID {pid} is already bound to a notebook")
            # the one and only gate: no TAN, no notebook
            self.pid_registry.consume_tan(prefix, suffix, tan, owner_user_id)
            record = NotebookRecord(
                notebook_id=new_id("nb"),
                pid=pid,
                owner_user_id=owner_user_id,
                group_id=group_id,
                title=title,
                storage_location=storage_location,
                date_from=date_from,
                date_to=date_to,
                acl=acl,
            )
            self.pid_registry.update_target(prefix, suffix, self.landing_url(prefix, suffix))
            self._notebooks[record.notebook_id] = record
            return record

    def get_notebook(self, notebook_id: str) -> NotebookRecord:
        record = self._notebooks.get(notebook_id)
        if record is None:
            raise UnknownNotebook(f"unknown notebook {notebook_id}")
        return record

    def find_by_pid(self, pid: str) -> NotebookRecord | None:
        return next((n for n in self._notebooks.values() if n.pid == pid), None)

    def exists(self, notebook_id: str) -> bool:
        return notebook_id in self._notebooks

    def upload_scan(
        self, notebook_id: str, filename: str, data: bytes, actor: str | None
    ) -> StoredFile:
        with self._lock:
            record = self.get_notebook(notebook_id)
            if not self.directory.can_write(actor, record.acl):
                raise AccessDenied(f"no write access to notebook {notebook_id}")
            if record.scan_package is None:
                pkg = self.package_store.create_package(
                    record.acl,
                    package_metadata={"notebook_id": notebook_id, "content": "scans"},
                )
                record.scan_package = pkg.package_id
            updated = self.package_store.run_transaction(
                record.scan_package,
                [PutFile(filename, data, {"notebook_id": notebook_id})],
                actor=actor,
            )
            return updated.files[filename]

    def list_notebooks(
        self,
        requester: str | None,
        group: str | None = None,
        owner: str | None = None,
        text: str | None = None,
    ) -> list[NotebookRecord]:
        needle = (text or "").lower()
        results = []
        for record in self._notebooks.values():
            if not self.directory.can_access(requester, record.acl):
                continue
            if group is not None and record.group_id != group:
                continue
            if owner is not None and record.owner_user_id != owner:
                continue
            if needle and needle not in f"{record.title} {record.storage_location}".lower():
                continue
            results.append(record)
        return results

    # -- persistence ---------------------------------------------------

    def export_state(self) -> dict:
        return {"notebooks": [n.to_dict() for n in self._notebooks.values()]}

    def import_state(self, state: dict) -> None:
        with self._lock:
            self._notebooks = {
                rec["notebook_id"]: NotebookRecord.from_dict(rec)
                for rec in state.get("notebooks", [])
            }
