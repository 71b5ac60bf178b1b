"""iPSC cell model catalogue and the standardized-name service client.

Names follow the registry pattern ``{InstitutionCode}i{NNN}-{clone}``
with ``-{n}`` suffixes for modified derivatives.  The catalogue never
invents names itself: they come from the naming service, which the mock
implements with per-institution and per-parent counters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from threading import RLock
from typing import Callable

import httpx

from ..core import AccessScope, Directory, Scope, new_id
from ..errors import AccessDenied, FairhubError, ValidationError, parse_enum


class CellLineKind(str, Enum):
    PATIENT_DERIVED = "PatientDerived"
    GENETICALLY_MODIFIED = "GeneticallyModified"


class UnknownCellLine(FairhubError):
    code = "unknown_cell_line"
    http_status = 404


class NamingServiceUnavailable(FairhubError):
    code = "naming_service_unavailable"
    http_status = 502

    def __init__(self, message: str, cell_id: str | None = None):
        super().__init__(message)
        self.cell_id = cell_id


class MockNamingService:
    """WSGI stand-in for the cell line naming registry.

    POST /api/namings with ``{"institution": "UMG"}`` issues the next
    institution name; adding ``"parent": "UMGi001-A"`` issues the next
    subclone name under that parent.
    """

    def __init__(self):
        self._institution_counters: dict[str, int] = {}
        self._subclone_counters: dict[str, int] = {}
        self.down = False

    def next_name(self, institution: str, parent: str | None = None) -> str:
        if parent:
            n = self._subclone_counters.get(parent, 0) + 1
            self._subclone_counters[parent] = n
            return f"{parent}-{n}"
        n = self._institution_counters.get(institution, 0) + 1
        self._institution_counters[institution] = n
        return f"{institution}i{n:03d}-A"

    def export_state(self) -> dict:
        return {
            "institution_counters": dict(self._institution_counters),
            "subclone_counters": dict(self._subclone_counters),
        }

    def import_state(self, state: dict) -> None:
        self._institution_counters = dict(state.get("institution_counters", {}))
        self._subclone_counters = dict(state.get("subclone_counters", {}))

    def __call__(self, environ, start_response):
        if self.down:
            start_response("503 Service Unavailable", [("Content-Type", "application/json")])
            return [b'{"error":"maintenance"}']
        method = environ["REQUEST_METHOD"]
        path = environ.get("PATH_INFO", "")
        if method != "POST" or path != "/api/namings":
            start_response("404 Not Found", [("Content-Type", "application/json")])
            return [b'{"error":"no such resource"}']
        try:
            length = int(environ.get("CONTENT_LENGTH") or 0)
        except ValueError:
            length = 0
        try:
            body = json.loads(environ["wsgi.input"].read(length) or b"{}")
            institution = body["institution"]
        except (json.JSONDecodeError, KeyError, UnicodeDecodeError):
            start_response("400 Bad Request", [("Content-Type", "application/json")])
            return [b'{"error":"institution required"}']
        name = self.next_name(institution, body.get("parent"))
        payload = json.dumps({"name": name}).encode("utf-8")
        start_response("200 OK", [("Content-Type", "application/json")])
        return [payload]


class NamingClient:
    def __init__(self, base_url: str, wsgi_app=None, http: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        if http is not None:
            self._http = http
        elif wsgi_app is not None:
            self._http = httpx.Client(
                base_url=self.base_url, transport=httpx.WSGITransport(app=wsgi_app)
            )
        else:
            self._http = httpx.Client(base_url=self.base_url, timeout=10.0)

    def request_name(self, institution: str, parent: str | None = None) -> str:
        body = {"institution": institution}
        if parent:
            body["parent"] = parent
        try:
            response = self._http.post("/api/namings", json=body)
        except httpx.HTTPError as exc:
            raise NamingServiceUnavailable(f"naming service unreachable: {exc}") from exc
        if response.status_code != 200:
            raise NamingServiceUnavailable(
                f"naming service answered {response.status_code}"
            )
        try:
            return response.json()["name"]
        except (json.JSONDecodeError, KeyError) as exc:
            raise NamingServiceUnavailable("malformed naming response") from exc

    def close(self) -> None:
        self._http.close()


@dataclass
class CellLine:
    cell_id: str
    kind: CellLineKind
    diagnosis: str
    donor_pseudonym: str
    ethics_approval_reference: str
    consent_status: str = ""
    donor_sex: str | None = None
    donor_age_at_sampling: int | None = None
    culture_medium: str = ""
    passage_notes: str = ""
    karyotype_ok: bool | None = None
    pluripotency_assay: str | None = None
    standardized_name: str | None = None
    naming_pending: bool = False
    institution_code: str | None = None
    parent_cell_id: str | None = None
    acl: AccessScope = field(default_factory=lambda: AccessScope(Scope.PROJECT))
    pid: str | None = None

    def to_dict(self) -> dict:
        return {
            "cell_id": self.cell_id,
            "kind": self.kind.value,
            "diagnosis": self.diagnosis,
            "donor_pseudonym": self.donor_pseudonym,
            "ethics_approval_reference": self.ethics_approval_reference,
            "consent_status": self.consent_status,
            "donor_sex": self.donor_sex,
            "donor_age_at_sampling": self.donor_age_at_sampling,
            "culture_medium": self.culture_medium,
            "passage_notes": self.passage_notes,
            "karyotype_ok": self.karyotype_ok,
            "pluripotency_assay": self.pluripotency_assay,
            "standardized_name": self.standardized_name,
            "naming_pending": self.naming_pending,
            "institution_code": self.institution_code,
            "parent_cell_id": self.parent_cell_id,
            "acl": self.acl.to_dict(),
            "pid": self.pid,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CellLine":
        return cls(
            cell_id=data["cell_id"],
            kind=CellLineKind(data["kind"]),
            diagnosis=data["diagnosis"],
            donor_pseudonym=data["donor_pseudonym"],
            ethics_approval_reference=data["ethics_approval_reference"],
            consent_status=data.get("consent_status", ""),
            donor_sex=data.get("donor_sex"),
            donor_age_at_sampling=data.get("donor_age_at_sampling"),
            culture_medium=data.get("culture_medium", ""),
            passage_notes=data.get("passage_notes", ""),
            karyotype_ok=data.get("karyotype_ok"),
            pluripotency_assay=data.get("pluripotency_assay"),
            standardized_name=data.get("standardized_name"),
            naming_pending=data.get("naming_pending", False),
            institution_code=data.get("institution_code"),
            parent_cell_id=data.get("parent_cell_id"),
            acl=AccessScope.from_dict(data["acl"]) if data.get("acl") else AccessScope(Scope.PROJECT),
            pid=data.get("pid"),
        )


class CellLineCatalogue:
    def __init__(
        self,
        directory: Directory,
        naming_client: NamingClient | None = None,
        mint_pid: Callable[[], str] | None = None,
    ):
        self.directory = directory
        self.naming_client = naming_client
        self.mint_pid = mint_pid
        self._lines: dict[str, CellLine] = {}
        self._lock = RLock()

    def register_cell_line(
        self,
        kind: CellLineKind | str,
        diagnosis: str,
        donor_pseudonym: str,
        ethics_approval_reference: str,
        request_standard_name: bool = False,
        institution_code: str | None = None,
        parent_cell_id: str | None = None,
        acl: AccessScope | None = None,
        cell_id: str | None = None,
        standardized_name: str | None = None,
        **extra,
    ) -> CellLine:
        kind = parse_enum(CellLineKind, kind, "kind")
        problems = []
        if not (donor_pseudonym or "").strip():
            problems.append("donor_pseudonym")
        if kind is CellLineKind.GENETICALLY_MODIFIED:
            if not parent_cell_id:
                problems.append("parent_cell_id")
        elif parent_cell_id:
            # only modified derivatives descend from another line
            problems.append("parent_cell_id")
        if request_standard_name and not (institution_code or "").strip():
            problems.append("institution_code")
        if problems:
            raise ValidationError(
                f"invalid cell line fields: {', '.join(problems)}", fields=problems
            )
        acl = acl or AccessScope(Scope.PROJECT)
        acl.validate()
        with self._lock:
            parent = None
            if kind is CellLineKind.GENETICALLY_MODIFIED:
                parent = self._lines.get(parent_cell_id)
                if parent is None:
                    raise ValidationError(
                        f"parent cell line {parent_cell_id} does not exist",
                        fields=["parent_cell_id"],
                    )
            if cell_id is not None and cell_id in self._lines:
                raise ValidationError(f"cell_id {cell_id} already exists", fields=["cell_id"])
            record = CellLine(
                cell_id=cell_id or new_id("cell"),
                kind=kind,
                diagnosis=diagnosis,
                donor_pseudonym=donor_pseudonym,
                ethics_approval_reference=ethics_approval_reference,
                standardized_name=standardized_name,
                institution_code=institution_code,
                parent_cell_id=parent_cell_id,
                acl=acl,
                **extra,
            )
            if self.mint_pid is not None:
                record.pid = self.mint_pid()
            self._lines[record.cell_id] = record
            if request_standard_name:
                try:
                    record.standardized_name = self._fetch_name(record, parent)
                except NamingServiceUnavailable as exc:
                    record.naming_pending = True
                    exc.cell_id = record.cell_id
                    raise
            return record

    def _fetch_name(self, record: CellLine, parent: CellLine | None) -> str:
        if self.naming_client is None:
            raise NamingServiceUnavailable("no naming service configured")
        parent_name = parent.standardized_name if parent else None
        return self.naming_client.request_name(record.institution_code, parent=parent_name)

    def request_standard_name(self, cell_id: str, institution_code: str | None = None) -> CellLine:
        """Retry naming for a record saved while the service was down."""
        with self._lock:
            record = self.get_cell_line(cell_id)
            if record.standardized_name:
                return record
            if institution_code:
                record.institution_code = institution_code
            if not record.institution_code:
                raise ValidationError(
                    "no institution code on record", fields=["institution_code"]
                )
            parent = self._lines.get(record.parent_cell_id) if record.parent_cell_id else None
            record.standardized_name = self._fetch_name(record, parent)
            record.naming_pending = False
            return record

    def get_cell_line(self, cell_id: str) -> CellLine:
        record = self._lines.get(cell_id)
        if record is None:
            raise UnknownCellLine(f"unknown cell line {cell_id}")
        return record

    def update_cell_line(self, cell_id: str, actor: str | None, **changes) -> CellLine:
        with self._lock:
            record = self.get_cell_line(cell_id)
            if not self.directory.can_write(actor, record.acl):
                raise AccessDenied(f"no write access to cell line {cell_id}")
            allowed = {
                "diagnosis", "consent_status", "donor_sex", "donor_age_at_sampling",
                "culture_medium", "passage_notes", "karyotype_ok",
                "pluripotency_assay", "acl",
            }
            unknown = set(changes) - allowed
            if unknown:
                raise ValidationError(f"unknown fields: {sorted(unknown)}", fields=sorted(unknown))
            for key, value in changes.items():
                setattr(record, key, value)
            return record

    def list_visible(self, requester: str | None) -> list[CellLine]:
        return [
            c for c in self._lines.values() if self.directory.can_access(requester, c.acl)
        ]

    def find_by_pid(self, pid: str) -> CellLine | None:
        return next((c for c in self._lines.values() if c.pid == pid), None)

    def exists(self, cell_id: str) -> bool:
        return cell_id in self._lines

    # -- persistence ---------------------------------------------------

    def export_state(self) -> dict:
        return {"cell_lines": [c.to_dict() for c in self._lines.values()]}

    def import_state(self, state: dict) -> None:
        with self._lock:
            self._lines = {
                rec["cell_id"]: CellLine.from_dict(rec)
                for rec in state.get("cell_lines", [])
            }
