"""Mouse line catalogue with standardized nomenclature generation.

The name grammar is a frozen subset of the international mouse
nomenclature rules: targeted mutations and knock-ins render as
``Gene<tm{serial}{LabCode}>``, transgenes as ``Tg({construct}){serial}{LabCode}``,
joined to the background strain with a hyphen.  Serial numbers count up
per (gene or construct, lab code) across the whole catalogue.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from threading import RLock
from typing import Callable

from ..core import AccessScope, Directory, Scope, new_id
from ..errors import AccessDenied, FairhubError, ValidationError, parse_enum

LAB_CODE_RE = re.compile(r"^[A-Z][a-z]+$")


class MutationKind(str, Enum):
    TARGETED_MUTATION = "TargetedMutation"
    TRANSGENE = "Transgene"
    KNOCK_IN = "KnockIn"


class BreedingType(str, Enum):
    INBRED = "Inbred"
    OUTBRED = "Outbred"
    CONGENIC = "Congenic"
    COISOGENIC = "Coisogenic"
    F1_HYBRID = "F1Hybrid"


class Sex(str, Enum):
    F = "F"
    M = "M"


class InvalidLabCode(ValidationError):
    code = "invalid_lab_code"


class MissingConstruct(ValidationError):
    code = "missing_construct"


class UnknownLine(FairhubError):
    code = "unknown_mouse_line"
    http_status = 404


class FutureBirthDate(ValidationError):
    code = "future_birth_date"


@dataclass
class MutationSpec:
    gene_symbol: str
    mutation_kind: MutationKind
    lab_code: str
    serial: int | None = None
    gene_ncbi_id: str | None = None
    construct: str | None = None

    def to_dict(self) -> dict:
        return {
            "gene_symbol": self.gene_symbol,
            "mutation_kind": self.mutation_kind.value,
            "lab_code": self.lab_code,
            "serial": self.serial,
            "gene_ncbi_id": self.gene_ncbi_id,
            "construct": self.construct,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MutationSpec":
        return cls(
            gene_symbol=data["gene_symbol"],
            mutation_kind=parse_enum(MutationKind, data["mutation_kind"], "mutation_kind"),
            lab_code=data["lab_code"],
            serial=data.get("serial"),
            gene_ncbi_id=data.get("gene_ncbi_id"),
            construct=data.get("construct"),
        )


def _segment(mutation: MutationSpec) -> str:
    if not LAB_CODE_RE.match(mutation.lab_code or ""):
        raise InvalidLabCode(
            f"lab code must be capitalized letters: {mutation.lab_code!r}",
            fields=["lab_code"],
        )
    if mutation.serial is None or mutation.serial < 1:
        raise ValidationError(
            f"mutation serial must be >= 1, got {mutation.serial!r}", fields=["serial"]
        )
    if mutation.mutation_kind is MutationKind.TRANSGENE:
        if not (mutation.construct or "").strip():
            raise MissingConstruct("transgene needs a construct", fields=["construct"])
        return f"Tg({mutation.construct}){mutation.serial}{mutation.lab_code}"
    return f"{mutation.gene_symbol}<tm{mutation.serial}{mutation.lab_code}>"


def generate_mouse_line_name(background_strain: str, mutations: list[MutationSpec]) -> str:
    """Pure function from line fields to the standardized line name."""
    if not mutations:
        return background_strain
    return background_strain + "-" + " ".join(_segment(m) for m in mutations)


@dataclass
class MouseLine:
    line_id: str
    background_strain: str
    breeding_type: BreedingType
    originating_lab: str
    mutations: list[MutationSpec]
    generated_name: str
    mpd_id: str | None = None
    provenance: str = ""
    acl: AccessScope = field(default_factory=lambda: AccessScope(Scope.PROJECT))
    pid: str | None = None

    def to_dict(self) -> dict:
        return {
            "line_id": self.line_id,
            "background_strain": self.background_strain,
            "breeding_type": self.breeding_type.value,
            "originating_lab": self.originating_lab,
            "mutations": [m.to_dict() for m in self.mutations],
            "generated_name": self.generated_name,
            "mpd_id": self.mpd_id,
            "provenance": self.provenance,
            "acl": self.acl.to_dict(),
            "pid": self.pid,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MouseLine":
        return cls(
            line_id=data["line_id"],
            background_strain=data["background_strain"],
            breeding_type=BreedingType(data["breeding_type"]),
            originating_lab=data["originating_lab"],
            mutations=[MutationSpec.from_dict(m) for m in data["mutations"]],
            generated_name=data["generated_name"],
            mpd_id=data.get("mpd_id"),
            provenance=data.get("provenance", ""),
            acl=AccessScope.from_dict(data["acl"]) if data.get("acl") else AccessScope(Scope.PROJECT),
            pid=data.get("pid"),
        )


@dataclass
class Mouse:
    mouse_id: str
    line_id: str
    name: str
    sex: Sex
    birth_date: date

    def to_dict(self) -> dict:
        return {
            "mouse_id": self.mouse_id,
            "line_id": self.line_id,
            "name": self.name,
            "sex": self.sex.value,
            "birth_date": self.birth_date.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Mouse":
        return cls(
            mouse_id=data["mouse_id"],
            line_id=data["line_id"],
            name=data["name"],
            sex=Sex(data["sex"]),
            birth_date=date.fromisoformat(data["birth_date"]),
        )


class MouseLineCatalogue:
    def __init__(
        self,
        directory: Directory,
        mint_pid: Callable[[], str] | None = None,
    ):
        self.directory = directory
        self.mint_pid = mint_pid
        self._lines: dict[str, MouseLine] = {}
        self._mice: dict[str, Mouse] = {}
        self._lock = RLock()

    def _serial_key(self, mutation: MutationSpec) -> tuple[str, str]:
        subject = (
            mutation.construct
            if mutation.mutation_kind is MutationKind.TRANSGENE
            else mutation.gene_symbol
        )
        return (subject or "", mutation.lab_code)

    def _next_serial(self, key: tuple[str, str], pending: dict[tuple[str, str], int]) -> int:
        highest = pending.get(key, 0)
        for line in self._lines.values():
            for m in line.mutations:
                if self._serial_key(m) == key and m.serial and m.serial > highest:
                    highest = m.serial
        return highest + 1

    def register_mouse_line(
        self,
        background_strain: str,
        breeding_type: BreedingType | str,
        originating_lab: str,
        mutations: list[MutationSpec] | None = None,
        mpd_id: str | None = None,
        provenance: str = "",
        acl: AccessScope | None = None,
    ) -> MouseLine:
        if not (background_strain or "").strip():
            raise ValidationError("background_strain must not be empty", fields=["background_strain"])
        mutations = [
            m if isinstance(m, MutationSpec) else MutationSpec.from_dict(m)
            for m in (mutations or [])
        ]
        for m in mutations:
            if m.mutation_kind is not MutationKind.TRANSGENE and not (m.gene_symbol or "").strip():
                raise ValidationError("mutation needs a gene symbol", fields=["gene_symbol"])
        acl = acl or AccessScope(Scope.PROJECT)
        acl.validate()
        with self._lock:
            pending: dict[tuple[str, str], int] = {}
            for m in mutations:
                if m.serial is None:
                    key = self._serial_key(m)
                    m.serial = self._next_serial(key, pending)
                    pending[key] = m.serial
            name = generate_mouse_line_name(background_strain, mutations)
            line = MouseLine(
                line_id=new_id("ml"),
                background_strain=background_strain,
                breeding_type=parse_enum(BreedingType, breeding_type, "breeding_type"),
                originating_lab=originating_lab,
                mutations=mutations,
                generated_name=name,
                mpd_id=mpd_id,
                provenance=provenance,
                acl=acl,
            )
            if self.mint_pid is not None:
                line.pid = self.mint_pid()
            self._lines[line.line_id] = line
            return line

    def get_line(self, line_id: str) -> MouseLine:
        line = self._lines.get(line_id)
        if line is None:
            raise UnknownLine(f"unknown mouse line {line_id}")
        return line

    def update_line(self, line_id: str, actor: str | None, **changes) -> MouseLine:
        """Edit line fields; the stored name is always recomputed."""
        with self._lock:
            line = self.get_line(line_id)
            if not self.directory.can_write(actor, line.acl):
                raise AccessDenied(f"no write access to mouse line {line_id}")
            allowed = {
                "background_strain", "breeding_type", "originating_lab",
                "mutations", "mpd_id", "provenance", "acl",
            }
            unknown = set(changes) - allowed
            if unknown:
                raise ValidationError(f"unknown fields: {sorted(unknown)}", fields=sorted(unknown))
            if "mutations" in changes:
                changes["mutations"] = [
                    m if isinstance(m, MutationSpec) else MutationSpec.from_dict(m)
                    for m in changes["mutations"]
                ]
                for m in changes["mutations"]:
                    if m.serial is None:
                        raise ValidationError(
                            "edited mutations must keep their serials", fields=["serial"]
                        )
            if "breeding_type" in changes:
                changes["breeding_type"] = parse_enum(
                    BreedingType, changes["breeding_type"], "breeding_type"
                )
            for key, value in changes.items():
                setattr(line, key, value)
            line.generated_name = generate_mouse_line_name(line.background_strain, line.mutations)
            return line

    def list_visible(self, requester: str | None) -> list[MouseLine]:
        return [
            l for l in self._lines.values() if self.directory.can_access(requester, l.acl)
        ]

    def find_by_pid(self, pid: str) -> MouseLine | None:
        return next((l for l in self._lines.values() if l.pid == pid), None)

    def exists(self, line_id: str) -> bool:
        return line_id in self._lines

    # -- individual mice -----------------------------------------------

    def add_mouse(
        self, line_id: str, name: str, sex: Sex | str, birth_date: date
    ) -> Mouse:
        with self._lock:
            self.get_line(line_id)
            if birth_date > date.today():
                raise FutureBirthDate(
                    f"birth date {birth_date.isoformat()} is in the future",
                    fields=["birth_date"],
                )
            mouse = Mouse(
                mouse_id=new_id("mouse"),
                line_id=line_id,
                name=name,
                sex=Sex(sex),
                birth_date=birth_date,
            )
            self._mice[mouse.mouse_id] = mouse
            return mouse

    def mice_of_line(self, line_id: str) -> list[Mouse]:
        self.get_line(line_id)
        return [m for m in self._mice.values() if m.line_id == line_id]

    def mouse_exists(self, mouse_id: str) -> bool:
        return mouse_id in self._mice

    # -- persistence ---------------------------------------------------

    def export_state(self) -> dict:
        return {
            "lines": [l.to_dict() for l in self._lines.values()],
            "mice": [m.to_dict() for m in self._mice.values()],
        }

    def import_state(self, state: dict) -> None:
        with self._lock:
            self._lines = {
                rec["line_id"]: MouseLine.from_dict(rec) for rec in state.get("lines", [])
            }
            self._mice = {
                rec["mouse_id"]: Mouse.from_dict(rec) for rec in state.get("mice", [])
            }
