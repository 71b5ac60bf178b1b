"""Workflow cases for microscopy and echocardiography service requests.

Each case kind has a fixed edge set and a role table; every state change
appends an audit entry, and the audit trail replayed from the initial
state always lands on the current state.  Transition checks are ordered:
the edge is validated before the actor, so probing an impossible action
never leaks who would be allowed to run it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from threading import RLock
from typing import Callable

from ..core import AccessScope, Directory, Scope, new_id, utcnow
from ..errors import FairhubError, ValidationError, parse_enum
from ..pidreg.registry import ObjectKind, PidRegistry
from ..pkgstore import PackageStore


class CaseKind(str, Enum):
    ALMN = "ALMN"
    ECHO = "Echo"


class AlmnState(str, Enum):
    REQUESTED = "Requested"
    IN_CONSULTATION = "InConsultation"
    LABELS_ISSUED = "LabelsIssued"
    AWAITING_DATA = "AwaitingData"
    DATA_STORED = "DataStored"
    CLOSED = "Closed"


class EchoState(str, Enum):
    REQUESTED = "Requested"
    UNDER_REVIEW = "UnderReview"
    INFO_REQUESTED = "InfoRequested"
    REJECTED = "Rejected"
    ACCEPTED = "Accepted"
    IN_PROGRESS = "InProgress"
    FINISHED = "Finished"
    UNDER_EVALUATION = "UnderEvaluation"
    EVALUATED = "Evaluated"


class UnknownCase(FairhubError):
    code = "unknown_case"
    http_status = 404


class IllegalTransition(FairhubError):
    code = "illegal_transition"
    http_status = 409


class IllegalState(FairhubError):
    code = "illegal_state"
    http_status = 409


class Unauthorized(FairhubError):
    code = "unauthorized"
    http_status = 403


class UnknownAntibodyRef(FairhubError):
    code = "unknown_antibody"
    http_status = 404


# action -> (from_state, to_state, roles allowed to run it)
# roles: "requester" is the case creator, "staff" any facility member,
# "evaluator" the assigned echo evaluator
ACTION_TABLE: dict[CaseKind, dict[str, tuple[str, str, frozenset[str]]]] = {
    CaseKind.ALMN: {
        "StartConsultation": ("Requested", "InConsultation", frozenset({"staff"})),
        "IssueLabels": ("InConsultation", "LabelsIssued", frozenset({"staff"})),
        "BeginDataCollection": ("LabelsIssued", "AwaitingData", frozenset({"requester", "staff"})),
        "StoreData": ("AwaitingData", "DataStored", frozenset({"staff"})),
        "Close": ("DataStored", "Closed", frozenset({"staff"})),
        "Feedback": ("Closed", "Closed", frozenset({"requester", "staff"})),
    },
    CaseKind.ECHO: {
        "Submit": ("Requested", "UnderReview", frozenset({"requester"})),
        "Accept": ("UnderReview", "Accepted", frozenset({"staff"})),
        "RequestInfo": ("UnderReview", "InfoRequested", frozenset({"staff"})),
        "Reject": ("UnderReview", "Rejected", frozenset({"staff"})),
        "ProvideInfo": ("InfoRequested", "UnderReview", frozenset({"requester"})),
        "Start": ("Accepted", "InProgress", frozenset({"staff"})),
        "Finish": ("InProgress", "Finished", frozenset({"staff"})),
        "AssignEvaluator": ("Finished", "UnderEvaluation", frozenset({"staff"})),
        "CompleteEvaluation": ("UnderEvaluation", "Evaluated", frozenset({"staff", "evaluator"})),
    },
}

INITIAL_STATE = {CaseKind.ALMN: AlmnState.REQUESTED.value, CaseKind.ECHO: EchoState.REQUESTED.value}


@dataclass
class AuditEntry:
    timestamp: datetime
    actor: str
    from_state: str | None
    to_state: str
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp.isoformat(),
            "actor": self.actor,
            "from_state": self.from_state,
            "to_state": self.to_state,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AuditEntry":
        return cls(
            timestamp=datetime.fromisoformat(data["timestamp"]),
            actor=data["actor"],
            from_state=data.get("from_state"),
            to_state=data["to_state"],
            note=data.get("note", ""),
        )


@dataclass
class LabelRecord:
    sample_id: str
    species: str
    staining_abbreviation: str
    pid: str

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "species": self.species,
            "staining_abbreviation": self.staining_abbreviation,
            "pid": self.pid,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LabelRecord":
        return cls(
            sample_id=data["sample_id"],
            species=data["species"],
            staining_abbreviation=data["staining_abbreviation"],
            pid=data["pid"],
        )


@dataclass
class WorkflowCase:
    case_id: str
    kind: CaseKind
    requester: str
    group_id: str
    state: str
    payload: dict
    audit_trail: list[AuditEntry] = field(default_factory=list)
    dataset_packages: list[str] = field(default_factory=list)
    acl: AccessScope = field(default_factory=lambda: AccessScope(Scope.PROJECT))
    pid: str | None = None

    @property
    def labels(self) -> list[LabelRecord]:
        return [LabelRecord.from_dict(l) for l in self.payload.get("labels", [])]

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "kind": self.kind.value,
            "requester": self.requester,
            "group_id": self.group_id,
            "state": self.state,
            "payload": dict(self.payload),
            "audit_trail": [e.to_dict() for e in self.audit_trail],
            "dataset_packages": list(self.dataset_packages),
            "acl": self.acl.to_dict(),
            "pid": self.pid,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WorkflowCase":
        return cls(
            case_id=data["case_id"],
            kind=CaseKind(data["kind"]),
            requester=data["requester"],
            group_id=data["group_id"],
            state=data["state"],
            payload=dict(data["payload"]),
            audit_trail=[AuditEntry.from_dict(e) for e in data.get("audit_trail", [])],
            dataset_packages=list(data.get("dataset_packages", [])),
            acl=AccessScope.from_dict(data["acl"]),
            pid=data.get("pid"),
        )


def labels_csv(case: WorkflowCase) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(["sample_id", "species", "staining_abbreviation", "pid"])
    for label in case.labels:
        writer.writerow(
            [label.sample_id, label.species, label.staining_abbreviation, label.pid]
        )
    return buffer.getvalue().encode("utf-8")


def _default_case_url(case_id: str) -> str:
    return f"https://fairhub.local/cases/{case_id}"


class WorkflowEngine:
    def __init__(
        self,
        directory: Directory,
        pid_registry: PidRegistry | None = None,
        package_store: PackageStore | None = None,
        antibody_exists: Callable[[str], bool] | None = None,
        mouse_exists: Callable[[str], bool] | None = None,
        case_url: Callable[[str], str] = _default_case_url,
        max_zip_bytes: int = 2 * 1024 ** 3,
    ):
        self.directory = directory
        self.pid_registry = pid_registry
        self.package_store = package_store
        self.antibody_exists = antibody_exists
        self.mouse_exists = mouse_exists
        self.case_url = case_url
        self.max_zip_bytes = max_zip_bytes
        self._cases: dict[str, WorkflowCase] = {}
        self._lock = RLock()

    # -- creation ------------------------------------------------------

    def create_case(
        self,
        kind: CaseKind | str,
        requester: str,
        payload: dict,
        group_id: str,
        acl: AccessScope | None = None,
    ) -> WorkflowCase:
        kind = parse_enum(CaseKind, kind, "kind")
        if not self.directory.is_authenticated(requester):
            raise Unauthorized("case creation requires an active account")
        self.directory.get_group(group_id)
        payload = dict(payload)
        if kind is CaseKind.ALMN:
            self._validate_almn_payload(payload)
            payload.setdefault("labels", [])
        else:
            self._validate_echo_payload(payload)
            payload.setdefault("evaluator", None)
            payload.setdefault("feedback", None)
        acl = acl or AccessScope(Scope.GROUP, requester, group_id)
        acl.validate()
        with self._lock:
            case = WorkflowCase(
                case_id=new_id("case"),
                kind=kind,
                requester=requester,
                group_id=group_id,
                state=INITIAL_STATE[kind],
                payload=payload,
                acl=acl,
            )
            case.audit_trail.append(
                AuditEntry(
                    timestamp=utcnow(),
                    actor=requester,
                    from_state=None,
                    to_state=case.state,
                    note="case created",
                )
            )
            self._cases[case.case_id] = case
            return case

    def _validate_almn_payload(self, payload: dict) -> None:
        if not (payload.get("research_question") or "").strip():
            raise ValidationError(
                "research_question must not be empty", fields=["research_question"]
            )
        for staining in payload.get("stainings", []):
            self._check_antibody_ref(staining.get("antibody_id"))

    def _validate_echo_payload(self, payload: dict) -> None:
        problems = []
        if not payload.get("mice"):
            problems.append("mice")
        if not (payload.get("surgery_type") or "").strip():
            problems.append("surgery_type")
        if problems:
            raise ValidationError(
                f"invalid echo payload: {', '.join(problems)}", fields=problems
            )
        for entry in payload.get("timeline", []):
            if not isinstance(entry.get("day_offset"), int):
                raise ValidationError(
                    "timeline entries need integer day_offset", fields=["timeline"]
                )
        if self.mouse_exists is not None:
            missing = [m for m in payload["mice"] if not self.mouse_exists(m)]
            if missing:
                raise ValidationError(
                    f"unknown mice: {', '.join(missing)}", fields=["mice"]
                )

    def _check_antibody_ref(self, antibody_id: str | None) -> None:
        if not antibody_id:
            raise ValidationError("staining needs antibody_id", fields=["stainings"])
        if self.antibody_exists is not None and not self.antibody_exists(antibody_id):
            raise UnknownAntibodyRef(f"no antibody {antibody_id} in the catalogue")

    # -- transitions ---------------------------------------------------

    def get_case(self, case_id: str) -> WorkflowCase:
        case = self._cases.get(case_id)
        if case is None:
            raise UnknownCase(f"unknown case {case_id}")
        return case

    def _actor_roles(self, case: WorkflowCase, actor: str | None) -> set[str]:
        roles = set()
        if actor is not None and actor == case.requester:
            roles.add("requester")
        if self.directory.is_facility_staff(actor):
            roles.add("staff")
        if actor is not None and actor == case.payload.get("evaluator"):
            roles.add("evaluator")
        return roles

    def available_actions(self, case_id: str, actor: str | None) -> list[str]:
        """Actions this actor could take on the case in its current state.

        This is the authoritative edge set clients render from; a client
        showing anything else would offer transitions the server rejects.
        """
        with self._lock:
            case = self.get_case(case_id)
            roles = self._actor_roles(case, actor)
            return sorted(
                action
                for action, (from_state, _to, allowed) in ACTION_TABLE[case.kind].items()
                if case.state == from_state and roles & allowed
            )

    def _apply_transition(
        self, case: WorkflowCase, actor: str, action: str, note: str = ""
    ) -> WorkflowCase:
        table = ACTION_TABLE[case.kind]
        entry = table.get(action)
        if entry is None:
            raise IllegalTransition(
                f"{case.kind.value} has no action {action!r}"
            )
        from_state, to_state, allowed = entry
        if case.state != from_state:
            raise IllegalTransition(
                f"action {action} requires state {from_state}, case is {case.state}"
            )
        if not (self._actor_roles(case, actor) & allowed):
            raise Unauthorized(f"{action} is not permitted for this actor")
        case.audit_trail.append(
            AuditEntry(
                timestamp=utcnow(),
                actor=actor,
                from_state=case.state,
                to_state=to_state,
                note=note,
            )
        )
        case.state = to_state
        return case

    def transition_case(
        self, case_id: str, actor: str, action: str, note: str = ""
    ) -> WorkflowCase:
        with self._lock:
            case = self.get_case(case_id)
            if action == "AssignEvaluator":
                raise IllegalTransition(
                    "evaluator assignment must go through assign_evaluator"
                )
            return self._apply_transition(case, actor, action, note)

    def apply_ingest_transition(
        self, case: WorkflowCase, actor: str, note: str = ""
    ) -> None:
        """Advance an ALMN case to DataStored after a successful upload.

        The upload itself is the authorization: the edge is applied with
        only the state check, and the audit entry names whoever pushed
        the archive.
        """
        if case.state != AlmnState.AWAITING_DATA.value:
            raise IllegalState(
                f"data storage requires state AwaitingData, case is {case.state}"
            )
        case.audit_trail.append(
            AuditEntry(
                timestamp=utcnow(),
                actor=actor,
                from_state=case.state,
                to_state=AlmnState.DATA_STORED.value,
                note=note,
            )
        )
        case.state = AlmnState.DATA_STORED.value

    # -- ALMN consultation ---------------------------------------------

    def record_consultation(
        self,
        case_id: str,
        actor: str,
        stainings: list[dict],
        samples: list[dict],
    ) -> list[LabelRecord]:
        with self._lock:
            case = self.get_case(case_id)
            if case.kind is not CaseKind.ALMN:
                raise IllegalState("consultation applies to microscopy cases only")
            if case.state != AlmnState.IN_CONSULTATION.value:
                raise IllegalState(
                    f"labels are issued from InConsultation, case is {case.state}"
                )
            for staining in stainings:
                self._check_antibody_ref(staining.get("antibody_id"))
            labels: list[LabelRecord] = []
            target = self.case_url(case_id)
            for sample in samples:
                for staining in stainings:
                    record = self.pid_registry.mint_for_kind(ObjectKind.LABEL_SET, target)
                    labels.append(
                        LabelRecord(
                            sample_id=sample.get("sample_id", ""),
                            species=sample.get("species", ""),
                            staining_abbreviation=staining.get("abbreviation", ""),
                            pid=record.pid,
                        )
                    )
            case.payload["stainings"] = [dict(s) for s in stainings]
            case.payload["samples"] = [dict(s) for s in samples]
            case.payload["labels"] = [l.to_dict() for l in labels]
            # the consultation op carries its own state gate; the edge is
            # applied without the generic role check
            case.audit_trail.append(
                AuditEntry(
                    timestamp=utcnow(),
                    actor=actor,
                    from_state=case.state,
                    to_state=AlmnState.LABELS_ISSUED.value,
                    note=f"{len(labels)} labels issued",
                )
            )
            case.state = AlmnState.LABELS_ISSUED.value
            return labels

    # -- echo evaluator ------------------------------------------------

    def assign_evaluator(
        self, case_id: str, evaluator_user_id: str, actor: str
    ) -> WorkflowCase:
        with self._lock:
            case = self.get_case(case_id)
            if case.kind is not CaseKind.ECHO:
                raise IllegalState("evaluators are assigned to echo cases only")
            if case.state != EchoState.FINISHED.value:
                raise IllegalState(
                    f"evaluator assignment requires state Finished, case is {case.state}"
                )
            if not self.directory.is_facility_staff(actor):
                raise Unauthorized("only facility staff assign evaluators")
            if not self.directory.is_authenticated(evaluator_user_id):
                raise ValidationError(
                    "evaluator must be an active account", fields=["evaluator_user_id"]
                )
            case.payload["evaluator"] = evaluator_user_id
            self._apply_transition(
                case, actor, "AssignEvaluator", note=f"evaluator {evaluator_user_id}"
            )
            if self.package_store is not None:
                for package_id in case.dataset_packages:
                    self.package_store.grant_read(package_id, evaluator_user_id, actor=actor)
            return case

    # -- queries -------------------------------------------------------

    def can_view_case(self, requester: str | None, case: WorkflowCase) -> bool:
        """Facility staff service cases across groups, so they see them all;
        everyone else falls under the case ACL."""
        return self.directory.is_facility_staff(requester) or self.directory.can_access(
            requester, case.acl
        )

    def list_cases(
        self,
        requester: str | None,
        kind: CaseKind | str | None = None,
        state: str | None = None,
    ) -> list[WorkflowCase]:
        wanted_kind = parse_enum(CaseKind, kind, "kind") if kind is not None else None
        results = []
        for case in self._cases.values():
            if not self.can_view_case(requester, case):
                continue
            if wanted_kind is not None and case.kind is not wanted_kind:
                continue
            if state is not None and case.state != state:
                continue
            results.append(case)
        return results

    def exists(self, case_id: str) -> bool:
        return case_id in self._cases

    def all_cases(self) -> list[WorkflowCase]:
        return list(self._cases.values())

    # -- persistence ---------------------------------------------------

    def export_state(self) -> dict:
        return {"cases": [c.to_dict() for c in self._cases.values()]}

    def import_state(self, state: dict) -> None:
        with self._lock:
            self._cases = {
                rec["case_id"]: WorkflowCase.from_dict(rec)
                for rec in state.get("cases", [])
            }
