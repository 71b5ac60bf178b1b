"""Identity, research groups, sub-projects, roles, and the 4-level access decision.

Everything else in the portal delegates its visibility checks to
:meth:`Directory.can_access`, which implements a fixed truth table over the
four scopes:

==========  ======================================================
scope       audience
==========  ======================================================
public      everyone, including anonymous requests
project     any authenticated (active) user of the instance
group       members of the owning group, plus the record owner
private     the record owner, plus the PI of the owning group
==========  ======================================================
"""

from __future__ import annotations

import hashlib
import hmac
import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from threading import RLock

from .errors import FairhubError, ValidationError


class Scope(str, Enum):
    """Visibility levels, widest to narrowest."""

    PUBLIC = "public"
    PROJECT = "project"
    GROUP = "group"
    PRIVATE = "private"


class Role(str, Enum):
    MEMBER = "member"
    PRINCIPAL_INVESTIGATOR = "principal_investigator"
    FACILITY_STAFF = "facility_staff"
    ADMIN = "admin"


@dataclass(frozen=True)
class AccessScope:
    """Visibility label attached to every record in the portal."""

    scope: Scope
    owner_user_id: str | None = None
    owning_group_id: str | None = None

    def validate(self) -> "AccessScope":
        if self.scope is Scope.GROUP and not self.owning_group_id:
            raise ValidationError("group scope requires an owning group", fields=["owning_group_id"])
        if self.scope is Scope.PRIVATE and not self.owner_user_id:
            raise ValidationError("private scope requires an owner", fields=["owner_user_id"])
        return self

    def to_dict(self) -> dict:
        return {
            "scope": self.scope.value,
            "owner_user_id": self.owner_user_id,
            "owning_group_id": self.owning_group_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AccessScope":
        return cls(
            scope=Scope(d["scope"]),
            owner_user_id=d.get("owner_user_id"),
            owning_group_id=d.get("owning_group_id"),
        )


PUBLIC = AccessScope(Scope.PUBLIC)


@dataclass
class UserProfile:
    user_id: str
    family_name: str
    given_name: str
    orcid: str
    credential_hash: str = field(repr=False)
    active: bool = True


@dataclass
class ResearchGroup:
    group_id: str
    name: str
    description: str = ""


@dataclass
class Subproject:
    subproject_id: str
    name: str
    participating_groups: set[str] = field(default_factory=set)


class InvalidOrcid(ValidationError):
    code = "invalid_orcid"


class DuplicateOrcid(FairhubError):
    code = "duplicate_orcid"
    http_status = 409


class UnknownUser(FairhubError):
    code = "unknown_user"
    http_status = 404


class UnknownGroup(FairhubError):
    code = "unknown_group"
    http_status = 404


_ORCID_RE = re.compile(r"^\d{4}-\d{4}-\d{4}-\d{3}[\dX]$")


def orcid_checksum_char(base_digits: str) -> str:
    """ISO 7064 mod 11-2 check character over the 15 leading digits."""
    total = 0
    for ch in base_digits:
        total = (total + int(ch)) * 2
    remainder = total % 11
    result = (12 - remainder) % 11
    return "X" if result == 10 else str(result)


def validate_orcid(orcid: str) -> str:
    """Return the ORCID unchanged if well-formed and checksum-valid."""
    if not _ORCID_RE.match(orcid or ""):
        raise InvalidOrcid(f"malformed ORCID iD: {orcid!r}", fields=["orcid"])
    digits = orcid.replace("-", "")
    if orcid_checksum_char(digits[:15]) != digits[15]:
        raise InvalidOrcid(f"ORCID checksum mismatch: {orcid}", fields=["orcid"])
    return orcid


@dataclass(frozen=True)
class ScryptParams:
    """Cost parameters for the scrypt password hash (memory-hard KDF)."""

    n: int = 2**14
    r: int = 8
    p: int = 1
    salt_len: int = 16
    dklen: int = 32


class PasswordHasher:
    """scrypt-backed credential hashing with a self-describing hash string."""

    def __init__(self, params: ScryptParams = ScryptParams()):
        self.params = params

    def hash(self, password: str) -> str:
        import secrets as _secrets

        p = self.params
        salt = _secrets.token_bytes(p.salt_len)
        key = hashlib.scrypt(
            password.encode("utf-8"), salt=salt, n=p.n, r=p.r, p=p.p, dklen=p.dklen
        )
        return f"scrypt${p.n}${p.r}${p.p}${salt.hex()}${key.hex()}"

    def verify(self, password: str, stored: str) -> bool:
        try:
            scheme, n, r, p, salt_hex, key_hex = stored.split("$")
            if scheme != "scrypt":
                return False
            expected = bytes.fromhex(key_hex)
            key = hashlib.scrypt(
                password.encode("utf-8"),
                salt=bytes.fromhex(salt_hex),
                n=int(n),
                r=int(r),
                p=int(p),
                dklen=len(expected),
            )
        except (ValueError, TypeError):
            return False
        return hmac.compare_digest(key, expected)


def new_id(prefix: str) -> str:
    return f"{prefix}_{uuid.uuid4().hex}"


class Directory:
    """Registry of users, groups, sub-projects, and role assignments.

    Writes are serialized under one lock; ``can_access`` takes no locks on
    the hot path beyond membership lookup and is safe to call concurrently.
    """

    def __init__(self, hasher: PasswordHasher | None = None):
        self._hasher = hasher or PasswordHasher()
        self._users: dict[str, UserProfile] = {}
        self._orcid_index: dict[str, str] = {}
        self._groups: dict[str, ResearchGroup] = {}
        self._group_names: dict[str, str] = {}
        self._subprojects: dict[str, Subproject] = {}
        self._memberships: dict[tuple[str, str], Role] = {}
        self._lock = RLock()

    # -- users ---------------------------------------------------------

    def create_user(self, family_name: str, given_name: str, orcid: str, password: str) -> UserProfile:
        if not family_name or not given_name:
            raise ValidationError(
                "family and given name are required",
                fields=[f for f, v in (("family_name", family_name), ("given_name", given_name)) if not v],
            )
        if not password:
            raise ValidationError("password must not be empty", fields=["password"])
        validate_orcid(orcid)
        with self._lock:
            if orcid in self._orcid_index:
                raise DuplicateOrcid(f"ORCID already registered: {orcid}")
            user = UserProfile(
                user_id=new_id("usr"),
                family_name=family_name,
                given_name=given_name,
                orcid=orcid,
                credential_hash=self._hasher.hash(password),
            )
            self._users[user.user_id] = user
            self._orcid_index[orcid] = user.user_id
            return user

    def get_user(self, user_id: str) -> UserProfile:
        user = self._users.get(user_id)
        if user is None:
            raise UnknownUser(f"no such user: {user_id}")
        return user

    def find_by_orcid(self, orcid: str) -> UserProfile | None:
        user_id = self._orcid_index.get(orcid)
        return self._users.get(user_id) if user_id else None

    def deactivate_user(self, user_id: str) -> UserProfile:
        with self._lock:
            user = self.get_user(user_id)
            user.active = False
            return user

    def verify_password(self, user: UserProfile, password: str) -> bool:
        return self._hasher.verify(password, user.credential_hash)

    def dummy_verify(self, password: str) -> None:
        """Burn the same work as a real check; equalizes timing for unknown users."""
        self._hasher.verify(password, self._hasher.hash("-"))

    # -- groups and sub-projects --------------------------------------

    def create_group(self, name: str, description: str = "") -> ResearchGroup:
        if not name:
            raise ValidationError("group name must not be empty", fields=["name"])
        with self._lock:
            if name in self._group_names:
                raise ValidationError(f"group name already in use: {name}", fields=["name"])
            group = ResearchGroup(group_id=new_id("grp"), name=name, description=description)
            self._groups[group.group_id] = group
            self._group_names[name] = group.group_id
            return group

    def get_group(self, group_id: str) -> ResearchGroup:
        group = self._groups.get(group_id)
        if group is None:
            raise UnknownGroup(f"no such group: {group_id}")
        return group

    def groups(self) -> list[ResearchGroup]:
        return list(self._groups.values())

    def create_subproject(self, name: str, participating_groups: set[str]) -> Subproject:
        if not participating_groups:
            raise ValidationError("a sub-project needs at least one group", fields=["participating_groups"])
        with self._lock:
            for gid in participating_groups:
                self.get_group(gid)
            sub = Subproject(new_id("sub"), name, set(participating_groups))
            self._subprojects[sub.subproject_id] = sub
            return sub

    def get_subproject(self, subproject_id: str) -> Subproject:
        sub = self._subprojects.get(subproject_id)
        if sub is None:
            raise FairhubError(f"no such sub-project: {subproject_id}")
        return sub

    # -- memberships ---------------------------------------------------

    def set_membership(self, user_id: str, group_id: str, role: Role) -> tuple[str, str, Role]:
        with self._lock:
            self.get_user(user_id)
            self.get_group(group_id)
            self._memberships[(user_id, group_id)] = Role(role)
            return (user_id, group_id, self._memberships[(user_id, group_id)])

    def role_in(self, user_id: str, group_id: str) -> Role | None:
        return self._memberships.get((user_id, group_id))

    def memberships_of(self, user_id: str) -> dict[str, Role]:
        return {gid: role for (uid, gid), role in self._memberships.items() if uid == user_id}

    def is_facility_staff(self, user_id: str | None) -> bool:
        """Facility staff status is granted by holding the role in any group."""
        if not user_id:
            return False
        return any(
            role in (Role.FACILITY_STAFF, Role.ADMIN)
            for (uid, _), role in self._memberships.items()
            if uid == user_id
        )

    # -- access decisions ---------------------------------------------

    def is_authenticated(self, user_id: str | None) -> bool:
        if not user_id:
            return False
        user = self._users.get(user_id)
        return user is not None and user.active

    def can_access(self, requester: str | None, acl: AccessScope) -> bool:
        """Total decision function for the 4-level access model."""
        acl.validate()
        if acl.scope is Scope.PUBLIC:
            return True
        if not self.is_authenticated(requester):
            return False
        if acl.scope is Scope.PROJECT:
            return True
        if requester == acl.owner_user_id:
            return True
        if acl.scope is Scope.GROUP:
            return self.role_in(requester, acl.owning_group_id) is not None
        # private: the PI of the owning group may read group members' records
        if acl.owning_group_id:
            return self.role_in(requester, acl.owning_group_id) is Role.PRINCIPAL_INVESTIGATOR
        return False

    def can_write(self, requester: str | None, acl: AccessScope) -> bool:
        """Write access: the owner, or the PI of the owning group."""
        if not self.is_authenticated(requester):
            return False
        if acl.owner_user_id and requester == acl.owner_user_id:
            return True
        if acl.owning_group_id:
            return self.role_in(requester, acl.owning_group_id) is Role.PRINCIPAL_INVESTIGATOR
        return False

    def list_visible(self, requester: str | None, records: list[tuple[str, AccessScope]]) -> list[str]:
        return [record_id for record_id, acl in records if self.can_access(requester, acl)]

    # -- persistence ---------------------------------------------------

    def export_state(self) -> dict:
        return {
            "users": [
                {
                    "user_id": u.user_id,
                    "family_name": u.family_name,
                    "given_name": u.given_name,
                    "orcid": u.orcid,
                    "credential_hash": u.credential_hash,
                    "active": u.active,
                }
                for u in self._users.values()
            ],
            "groups": [
                {"group_id": g.group_id, "name": g.name, "description": g.description}
                for g in self._groups.values()
            ],
            "subprojects": [
                {
                    "subproject_id": s.subproject_id,
                    "name": s.name,
                    "participating_groups": sorted(s.participating_groups),
                }
                for s in self._subprojects.values()
            ],
            "memberships": [
                {"user_id": uid, "group_id": gid, "role": role.value}
                for (uid, gid), role in self._memberships.items()
            ],
        }

    def import_state(self, state: dict) -> None:
        with self._lock:
            for u in state.get("users", []):
                user = UserProfile(
                    user_id=u["user_id"],
                    family_name=u["family_name"],
                    given_name=u["given_name"],
                    orcid=u["orcid"],
                    credential_hash=u["credential_hash"],
                    active=u.get("active", True),
                )
                self._users[user.user_id] = user
                self._orcid_index[user.orcid] = user.user_id
            for g in state.get("groups", []):
                group = ResearchGroup(g["group_id"], g["name"], g.get("description", ""))
                self._groups[group.group_id] = group
                self._group_names[group.name] = group.group_id
            for s in state.get("subprojects", []):
                self._subprojects[s["subproject_id"]] = Subproject(
                    s["subproject_id"], s["name"], set(s.get("participating_groups", []))
                )
            for m in state.get("memberships", []):
                self._memberships[(m["user_id"], m["group_id"])] = Role(m["role"])


def utcnow() -> datetime:
    return datetime.now(timezone.utc)
