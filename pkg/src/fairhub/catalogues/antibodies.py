"""Antibody catalogue with anonymous application assessments."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from threading import RLock
from typing import Callable

from ..core import AccessScope, Directory, Scope, new_id, utcnow
from ..errors import AccessDenied, FairhubError, ValidationError, parse_enum

RRID_RE = re.compile(r"^AB_[0-9]+$")

KNOWN_APPLICATIONS = ("Immunofluorescence", "WesternBlot", "IHC", "FACS", "ELISA")


class AntibodyKind(str, Enum):
    PRIMARY = "Primary"
    SECONDARY = "Secondary"


class Clonality(str, Enum):
    MONOCLONAL = "Monoclonal"
    POLYCLONAL = "Polyclonal"


class UnknownAntibody(FairhubError):
    code = "unknown_antibody"
    http_status = 404


class RatingOutOfRange(ValidationError):
    code = "rating_out_of_range"


@dataclass
class Antibody:
    antibody_id: str
    kind: AntibodyKind
    designation: str
    target: str
    host_species: str
    clonality: Clonality
    manufacturer_name: str
    catalog_number: str = ""
    antibody_registry_id: str | None = None
    antibodypedia_url: str | None = None
    reactivity_species: str = ""
    acl: AccessScope = field(default_factory=lambda: AccessScope(Scope.PROJECT))
    pid: str | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "antibody_id": self.antibody_id,
            "kind": self.kind.value,
            "designation": self.designation,
            "target": self.target,
            "host_species": self.host_species,
            "clonality": self.clonality.value,
            "manufacturer_name": self.manufacturer_name,
            "catalog_number": self.catalog_number,
            "antibody_registry_id": self.antibody_registry_id,
            "antibodypedia_url": self.antibodypedia_url,
            "reactivity_species": self.reactivity_species,
            "acl": self.acl.to_dict(),
            "pid": self.pid,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Antibody":
        return cls(
            antibody_id=data["antibody_id"],
            kind=AntibodyKind(data["kind"]),
            designation=data["designation"],
            target=data["target"],
            host_species=data["host_species"],
            clonality=Clonality(data["clonality"]),
            manufacturer_name=data["manufacturer_name"],
            catalog_number=data.get("catalog_number", ""),
            antibody_registry_id=data.get("antibody_registry_id"),
            antibodypedia_url=data.get("antibodypedia_url"),
            reactivity_species=data.get("reactivity_species", ""),
            acl=AccessScope.from_dict(data["acl"]) if data.get("acl") else AccessScope(Scope.PROJECT),
            pid=data.get("pid"),
            warnings=list(data.get("warnings", [])),
        )


@dataclass
class ApplicationAssessment:
    """Deliberately carries no author identity of any kind."""

    assessment_id: str
    antibody_id: str
    application: str
    rating: int
    comment: str = ""
    image_package: str | None = None
    created_at: datetime = field(default_factory=utcnow)

    def to_dict(self) -> dict:
        return {
            "assessment_id": self.assessment_id,
            "antibody_id": self.antibody_id,
            "application": self.application,
            "rating": self.rating,
            "comment": self.comment,
            "image_package": self.image_package,
            "created_at": self.created_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ApplicationAssessment":
        return cls(
            assessment_id=data["assessment_id"],
            antibody_id=data["antibody_id"],
            application=data["application"],
            rating=data["rating"],
            comment=data.get("comment", ""),
            image_package=data.get("image_package"),
            created_at=datetime.fromisoformat(data["created_at"]),
        )


class AntibodyCatalogue:
    def __init__(
        self,
        directory: Directory,
        mint_pid: Callable[[], str] | None = None,
    ):
        self.directory = directory
        self.mint_pid = mint_pid
        self._antibodies: dict[str, Antibody] = {}
        self._assessments: list[ApplicationAssessment] = []
        self._lock = RLock()

    def register_antibody(
        self,
        kind: AntibodyKind | str,
        designation: str,
        target: str,
        host_species: str,
        clonality: Clonality | str,
        manufacturer_name: str,
        catalog_number: str = "",
        antibody_registry_id: str | None = None,
        antibodypedia_url: str | None = None,
        reactivity_species: str = "",
        acl: AccessScope | None = None,
        antibody_id: str | None = None,
    ) -> Antibody:
        problems = [
            name
            for name, value in (
                ("designation", designation),
                ("target", target),
                ("manufacturer_name", manufacturer_name),
            )
            if not (value or "").strip()
        ]
        if problems:
            raise ValidationError(
                f"missing required antibody fields: {', '.join(problems)}", fields=problems
            )
        warnings = []
        if antibody_registry_id and not RRID_RE.match(antibody_registry_id):
            # kept as free text: external registries evolve their id schemes
            warnings.append(
                f"antibody_registry_id {antibody_registry_id!r} does not look like AB_<digits>"
            )
        acl = acl or AccessScope(Scope.PROJECT)
        acl.validate()
        with self._lock:
            if antibody_id is not None and antibody_id in self._antibodies:
                raise ValidationError(
                    f"antibody_id {antibody_id} already exists", fields=["antibody_id"]
                )
            record = Antibody(
                antibody_id=antibody_id or new_id("ab"),
                kind=parse_enum(AntibodyKind, kind, "kind"),
                designation=designation,
                target=target,
                host_species=host_species,
                clonality=parse_enum(Clonality, clonality, "clonality"),
                manufacturer_name=manufacturer_name,
                catalog_number=catalog_number,
                antibody_registry_id=antibody_registry_id,
                antibodypedia_url=antibodypedia_url,
                reactivity_species=reactivity_species,
                acl=acl,
                warnings=warnings,
            )
            if self.mint_pid is not None:
                record.pid = self.mint_pid()
            self._antibodies[record.antibody_id] = record
            return record

    def get_antibody(self, antibody_id: str) -> Antibody:
        record = self._antibodies.get(antibody_id)
        if record is None:
            raise UnknownAntibody(f"unknown antibody {antibody_id}")
        return record

    def update_antibody(self, antibody_id: str, actor: str | None, **changes) -> Antibody:
        with self._lock:
            record = self.get_antibody(antibody_id)
            if not self.directory.can_write(actor, record.acl):
                raise AccessDenied(f"no write access to antibody {antibody_id}")
            allowed = {
                "kind", "designation", "target", "host_species", "clonality",
                "manufacturer_name", "catalog_number", "antibody_registry_id",
                "antibodypedia_url", "reactivity_species", "acl",
            }
            unknown = set(changes) - allowed
            if unknown:
                raise ValidationError(f"unknown fields: {sorted(unknown)}", fields=sorted(unknown))
            for key, value in changes.items():
                if key == "kind":
                    value = parse_enum(AntibodyKind, value, "kind")
                elif key == "clonality":
                    value = parse_enum(Clonality, value, "clonality")
                setattr(record, key, value)
            if not record.designation.strip():
                raise ValidationError("designation must stay non-empty", fields=["designation"])
            return record

    def list_visible(self, requester: str | None) -> list[Antibody]:
        return [
            a
            for a in self._antibodies.values()
            if self.directory.can_access(requester, a.acl)
        ]

    def find_by_pid(self, pid: str) -> Antibody | None:
        return next((a for a in self._antibodies.values() if a.pid == pid), None)

    def exists(self, antibody_id: str) -> bool:
        return antibody_id in self._antibodies

    # -- assessments ---------------------------------------------------

    def record_assessment(
        self,
        antibody_id: str,
        application: str,
        rating: int,
        comment: str = "",
        image_package: str | None = None,
    ) -> ApplicationAssessment:
        self.get_antibody(antibody_id)
        if not isinstance(rating, int) or not (1 <= rating <= 5):
            raise RatingOutOfRange(f"rating must be an integer 1..5, got {rating!r}", fields=["rating"])
        if not (application or "").strip():
            raise ValidationError("application must not be empty", fields=["application"])
        with self._lock:
            assessment = ApplicationAssessment(
                assessment_id=new_id("asmt"),
                antibody_id=antibody_id,
                application=application,
                rating=rating,
                comment=comment,
                image_package=image_package,
            )
            self._assessments.append(assessment)
            return assessment

    def assessments_for(self, antibody_id: str) -> list[ApplicationAssessment]:
        self.get_antibody(antibody_id)
        return [a for a in self._assessments if a.antibody_id == antibody_id]

    def average_rating(self, antibody_id: str, application: str) -> float | None:
        ratings = [
            a.rating
            for a in self.assessments_for(antibody_id)
            if a.application == application
        ]
        return sum(ratings) / len(ratings) if ratings else None

    # -- persistence ---------------------------------------------------

    def export_state(self) -> dict:
        return {
            "antibodies": [a.to_dict() for a in self._antibodies.values()],
            "assessments": [a.to_dict() for a in self._assessments],
        }

    def import_state(self, state: dict) -> None:
        with self._lock:
            self._antibodies = {
                rec["antibody_id"]: Antibody.from_dict(rec)
                for rec in state.get("antibodies", [])
            }
            self._assessments = [
                ApplicationAssessment.from_dict(rec)
                for rec in state.get("assessments", [])
            ]
