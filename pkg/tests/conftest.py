import pytest

from fairhub.core import Directory, PasswordHasher, Role, ScryptParams
from fairhub.gateway import Portal

# full-strength scrypt is deliberately slow; tests shrink the work factor
FAST_PARAMS = ScryptParams(n=2**4, r=8, p=1)


def make_orcid(n: int) -> str:
    """Valid ORCID for an arbitrary integer, ISO 7064 mod 11-2 check digit."""
    base = f"{n:015d}"
    total = 0
    for ch in base:
        total = (total + int(ch)) * 2
    check = (12 - (total % 11)) % 11
    digits = base + ("X" if check == 10 else str(check))
    return "-".join(digits[i : i + 4] for i in range(0, 16, 4))


@pytest.fixture
def hasher():
    return PasswordHasher(FAST_PARAMS)


@pytest.fixture
def directory(hasher):
    return Directory(hasher)


@pytest.fixture
def portal(tmp_path, hasher):
    p = Portal(tmp_path / "data", hasher=hasher)
    yield p
    p.close()


@pytest.fixture
def people(portal):
    """A small cast covering every access class.

    alice: PI of "lab", owns most fixtures here
    bob:   plain member of "lab"
    carol: authenticated but in no group (project-level stranger)
    dana:  facility staff (staff role in the imaging group)
    eve:   admin in the imaging group
    """
    d = portal.directory
    alice = d.create_user("Adams", "Alice", make_orcid(11), "pw-alice")
    bob = d.create_user("Brown", "Bob", make_orcid(12), "pw-bob")
    carol = d.create_user("Clark", "Carol", make_orcid(13), "pw-carol")
    dana = d.create_user("Diaz", "Dana", make_orcid(14), "pw-dana")
    eve = d.create_user("Evans", "Eve", make_orcid(15), "pw-eve")
    lab = d.create_group("Cardiology Lab")
    imaging = d.create_group("Imaging Core")
    d.set_membership(alice.user_id, lab.group_id, Role.PRINCIPAL_INVESTIGATOR)
    d.set_membership(bob.user_id, lab.group_id, Role.MEMBER)
    d.set_membership(dana.user_id, imaging.group_id, Role.FACILITY_STAFF)
    d.set_membership(eve.user_id, imaging.group_id, Role.ADMIN)
    return {
        "alice": alice,
        "bob": bob,
        "carol": carol,
        "dana": dana,
        "eve": eve,
        "lab": lab,
        "imaging": imaging,
    }
