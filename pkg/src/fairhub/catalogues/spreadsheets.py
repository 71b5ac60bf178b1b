"""Spreadsheet interchange for the antibody and cell model catalogues.

The wire format is RFC 4180 CSV with fixed headers.  Import is
all-or-nothing: every row is validated up front and nothing is persisted
when any row fails; the error report cites file line numbers (the header
is line 1).
"""

from __future__ import annotations

import csv
import io

from ..core import AccessScope
from ..errors import ValidationError
from .antibodies import Antibody, AntibodyCatalogue, AntibodyKind, Clonality
from .cell_lines import CellLine, CellLineCatalogue, CellLineKind

ANTIBODY_CSV_HEADER = [
    "antibody_id",
    "kind",
    "designation",
    "target",
    "host_species",
    "clonality",
    "manufacturer_name",
    "catalog_number",
    "antibody_registry_id",
    "antibodypedia_url",
]

CELL_LINE_CSV_HEADER = [
    "cell_id",
    "kind",
    "standardized_name",
    "diagnosis",
    "donor_pseudonym",
    "ethics_approval_reference",
    "parent_cell_id",
]


class HeaderMismatch(ValidationError):
    code = "header_mismatch"


class RowValidationError(ValidationError):
    code = "row_validation_error"

    def __init__(self, problems: list[tuple[int, str]]):
        self.rows = [line for line, _ in problems]
        details = "; ".join(f"line {line}: {reason}" for line, reason in problems)
        super().__init__(f"import rejected, nothing persisted: {details}")


def _write_csv(header: list[str], rows: list[list]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue().encode("utf-8")


def _read_csv(data: bytes, header: list[str]) -> list[tuple[int, dict]]:
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    try:
        got = next(reader)
    except StopIteration:
        raise HeaderMismatch("CSV payload is empty", fields=["header"])
    if got != header:
        raise HeaderMismatch(f"expected header {header}, got {got}", fields=["header"])
    rows = []
    for line_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise RowValidationError(
                [(line_number, f"{len(row)} columns, expected {len(header)}")]
            )
        rows.append((line_number, dict(zip(header, row))))
    return rows


# -- antibodies --------------------------------------------------------


def export_antibodies_csv(catalogue: AntibodyCatalogue, requester: str | None) -> bytes:
    rows = [
        [
            a.antibody_id,
            a.kind.value,
            a.designation,
            a.target,
            a.host_species,
            a.clonality.value,
            a.manufacturer_name,
            a.catalog_number,
            a.antibody_registry_id or "",
            a.antibodypedia_url or "",
        ]
        for a in catalogue.list_visible(requester)
    ]
    return _write_csv(ANTIBODY_CSV_HEADER, rows)


def import_antibodies_csv(
    catalogue: AntibodyCatalogue, data: bytes, acl: AccessScope | None = None
) -> list[Antibody]:
    rows = _read_csv(data, ANTIBODY_CSV_HEADER)
    problems: list[tuple[int, str]] = []
    staged: list[dict] = []
    seen_ids: set[str] = set()
    for line_number, rec in rows:
        if not rec["antibody_id"].strip():
            problems.append((line_number, "antibody_id is empty"))
            continue
        if rec["antibody_id"] in seen_ids:
            problems.append((line_number, f"duplicate antibody_id {rec['antibody_id']}"))
            continue
        seen_ids.add(rec["antibody_id"])
        try:
            AntibodyKind(rec["kind"])
        except ValueError:
            problems.append((line_number, f"unknown kind {rec['kind']!r}"))
        try:
            Clonality(rec["clonality"])
        except ValueError:
            problems.append((line_number, f"unknown clonality {rec['clonality']!r}"))
        for column in ("designation", "target", "manufacturer_name"):
            if not rec[column].strip():
                problems.append((line_number, f"{column} is empty"))
        staged.append(rec)
    if problems:
        raise RowValidationError(problems)
    imported = []
    with catalogue._lock:
        for rec in staged:
            if catalogue.exists(rec["antibody_id"]):
                record = catalogue.get_antibody(rec["antibody_id"])
                record.kind = AntibodyKind(rec["kind"])
                record.designation = rec["designation"]
                record.target = rec["target"]
                record.host_species = rec["host_species"]
                record.clonality = Clonality(rec["clonality"])
                record.manufacturer_name = rec["manufacturer_name"]
                record.catalog_number = rec["catalog_number"]
                record.antibody_registry_id = rec["antibody_registry_id"] or None
                record.antibodypedia_url = rec["antibodypedia_url"] or None
            else:
                record = catalogue.register_antibody(
                    kind=rec["kind"],
                    designation=rec["designation"],
                    target=rec["target"],
                    host_species=rec["host_species"],
                    clonality=rec["clonality"],
                    manufacturer_name=rec["manufacturer_name"],
                    catalog_number=rec["catalog_number"],
                    antibody_registry_id=rec["antibody_registry_id"] or None,
                    antibodypedia_url=rec["antibodypedia_url"] or None,
                    acl=acl,
                    antibody_id=rec["antibody_id"],
                )
            imported.append(record)
    return imported


# -- cell lines --------------------------------------------------------


def export_cell_lines_csv(catalogue: CellLineCatalogue, requester: str | None) -> bytes:
    rows = [
        [
            c.cell_id,
            c.kind.value,
            c.standardized_name or "",
            c.diagnosis,
            c.donor_pseudonym,
            c.ethics_approval_reference,
            c.parent_cell_id or "",
        ]
        for c in catalogue.list_visible(requester)
    ]
    return _write_csv(CELL_LINE_CSV_HEADER, rows)


def import_cell_lines_csv(
    catalogue: CellLineCatalogue, data: bytes, acl: AccessScope | None = None
) -> list[CellLine]:
    rows = _read_csv(data, CELL_LINE_CSV_HEADER)
    problems: list[tuple[int, str]] = []
    staged: list[tuple[int, dict]] = []
    file_ids = {rec["cell_id"] for _, rec in rows}
    seen_ids: set[str] = set()
    for line_number, rec in rows:
        if not rec["cell_id"].strip():
            problems.append((line_number, "cell_id is empty"))
            continue
        if rec["cell_id"] in seen_ids:
            problems.append((line_number, f"duplicate cell_id {rec['cell_id']}"))
            continue
        seen_ids.add(rec["cell_id"])
        try:
            kind = CellLineKind(rec["kind"])
        except ValueError:
            problems.append((line_number, f"unknown kind {rec['kind']!r}"))
            continue
        if not rec["donor_pseudonym"].strip():
            problems.append((line_number, "donor_pseudonym is empty"))
        parent = rec["parent_cell_id"].strip()
        if kind is CellLineKind.GENETICALLY_MODIFIED:
            if not parent:
                problems.append((line_number, "GeneticallyModified row needs parent_cell_id"))
            elif parent not in file_ids and not catalogue.exists(parent):
                problems.append((line_number, f"parent {parent} does not exist"))
        elif parent:
            problems.append((line_number, "PatientDerived row must not set parent_cell_id"))
        staged.append((line_number, rec))
    # apply parents before children regardless of file order; a file-internal
    # reference cycle can never be satisfied, so it fails validation
    ordered: list[dict] = []
    placed: set[str] = set()
    pending = list(staged)
    while pending:
        progressed = False
        still_pending = []
        for line_number, rec in pending:
            parent = rec["parent_cell_id"].strip()
            if not parent or parent in placed or parent not in file_ids:
                ordered.append(rec)
                placed.add(rec["cell_id"])
                progressed = True
            else:
                still_pending.append((line_number, rec))
        if not progressed:
            problems.extend(
                (line_number, "circular parent reference") for line_number, _ in still_pending
            )
            break
        pending = still_pending
    if problems:
        raise RowValidationError(problems)
    staged_records = ordered
    imported = []
    with catalogue._lock:
        for rec in staged_records:
            parent = rec["parent_cell_id"].strip() or None
            if catalogue.exists(rec["cell_id"]):
                record = catalogue.get_cell_line(rec["cell_id"])
                record.kind = CellLineKind(rec["kind"])
                record.standardized_name = rec["standardized_name"] or None
                record.diagnosis = rec["diagnosis"]
                record.donor_pseudonym = rec["donor_pseudonym"]
                record.ethics_approval_reference = rec["ethics_approval_reference"]
                record.parent_cell_id = parent
            else:
                record = catalogue.register_cell_line(
                    kind=rec["kind"],
                    diagnosis=rec["diagnosis"],
                    donor_pseudonym=rec["donor_pseudonym"],
                    ethics_approval_reference=rec["ethics_approval_reference"],
                    standardized_name=rec["standardized_name"] or None,
                    parent_cell_id=parent,
                    acl=acl,
                    cell_id=rec["cell_id"],
                )
            imported.append(record)
    return imported
