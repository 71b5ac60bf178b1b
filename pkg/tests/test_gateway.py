"""HTTP surface: sessions, error envelopes, content negotiation, and the
cross-module flows (TAN to notebook, consultation to labels, zip ingest)
exactly as a browser or script client would drive them."""

import csv
import io
import json
import zipfile
from pathlib import Path
from types import SimpleNamespace

import pytest
from fastapi.testclient import TestClient

from fairhub.core import Role
from fairhub.gateway import Portal, create_app

from conftest import FAST_PARAMS, make_orcid
from fairhub.core import PasswordHasher
from test_workflows import build_tiff

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def gw(tmp_path):
    portal = Portal(
        tmp_path / "data",
        hasher=PasswordHasher(FAST_PARAMS),
        upstream_mode="fixture",
        fixture_dir=FIXTURES,
    )
    d = portal.directory
    alice = d.create_user("Adams", "Alice", make_orcid(11), "pw-alice")
    bob = d.create_user("Brown", "Bob", make_orcid(12), "pw-bob")
    carol = d.create_user("Clark", "Carol", make_orcid(13), "pw-carol")
    dana = d.create_user("Diaz", "Dana", make_orcid(14), "pw-dana")
    lab = d.create_group("Cardiology Lab")
    imaging = d.create_group("Imaging Core")
    d.set_membership(alice.user_id, lab.group_id, Role.PRINCIPAL_INVESTIGATOR)
    d.set_membership(bob.user_id, lab.group_id, Role.MEMBER)
    d.set_membership(dana.user_id, imaging.group_id, Role.FACILITY_STAFF)

    client = TestClient(create_app(portal), raise_server_exceptions=False)

    def token_for(orcid, password):
        r = client.post(
            "/api/v1/auth/login",
            json={"username_or_orcid": orcid, "password": password},
        )
        assert r.status_code == 200, r.text
        return r.json()["token"]

    def auth(token):
        return {"Authorization": f"Bearer {token}"}

    env = SimpleNamespace(
        client=client, portal=portal, auth=auth,
        alice=alice, bob=bob, carol=carol, dana=dana,
        lab=lab, imaging=imaging,
        t_alice=token_for(alice.orcid, "pw-alice"),
        t_bob=token_for(bob.orcid, "pw-bob"),
        t_carol=token_for(carol.orcid, "pw-carol"),
        t_dana=token_for(dana.orcid, "pw-dana"),
    )
    yield env
    client.close()


def group_acl(env):
    return {
        "scope": "group",
        "owner_user_id": env.alice.user_id,
        "owning_group_id": env.lab.group_id,
    }


ARTICLE_BODY = {
    "title": "Sarcomere remodeling after pressure overload",
    "authors": [
        {"family": "Adams", "given": "Alice", "orcid": None},
        {"family": "Brown", "given": "Bob"},
    ],
    "year": 2021,
    "journal": "Journal of Test Cardiology",
    "publication_type": "Journal Article",
    "open_access": True,
    "doi": "10.5555/jtc.2021.9",
    "volume": "88",
    "start_page": "101",
}


# -- sessions and envelopes -------------------------------------------


def test_health_needs_no_session(gw):
    r = gw.client.get("/api/v1/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok"}


def test_login_logout_cycle(gw):
    c = gw.client
    bad = c.post(
        "/api/v1/auth/login",
        json={"username_or_orcid": gw.alice.orcid, "password": "nope"},
    )
    assert bad.status_code == 401
    assert bad.json()["error"]["code"] == "invalid_credentials"
    # unknown account fails the same way, no oracle for valid usernames
    ghost = c.post(
        "/api/v1/auth/login",
        json={"username_or_orcid": "0000-0000-0000-0000", "password": "nope"},
    )
    assert ghost.status_code == 401
    assert ghost.json()["error"]["code"] == "invalid_credentials"

    good = c.post(
        "/api/v1/auth/login",
        json={"username_or_orcid": gw.alice.orcid, "password": "pw-alice"},
    )
    assert good.status_code == 200
    payload = good.json()
    assert payload["user_id"] == gw.alice.user_id
    assert payload["is_facility_staff"] is False
    token = payload["token"]

    me = c.get("/api/v1/me", headers=gw.auth(token))
    assert me.status_code == 200
    assert me.json()["memberships"] == [
        {"group_id": gw.lab.group_id, "role": "principal_investigator"}
    ]

    c.post("/api/v1/auth/logout", headers=gw.auth(token))
    after = c.get("/api/v1/me", headers=gw.auth(token))
    assert after.status_code == 401
    assert after.json()["error"]["code"] == "auth_required"


def test_error_envelope_is_uniform(gw):
    c = gw.client
    missing = c.get("/api/v1/articles/art_missing")
    assert missing.status_code == 404
    body = missing.json()
    assert set(body) == {"error"}
    assert body["error"]["code"] == "unknown_article"
    assert "message" in body["error"]

    invalid = c.post(
        "/api/v1/articles", headers=gw.auth(gw.t_alice),
        json={"title": "", "year": 2021},
    )
    assert invalid.status_code == 400
    assert invalid.json()["error"]["code"] == "validation_error"
    assert "fields" in invalid.json()["error"]

    not_json = c.post(
        "/api/v1/articles", headers=gw.auth(gw.t_alice), content=b"<xml/>"
    )
    assert not_json.status_code == 400


# -- articles over HTTP -----------------------------------------------


def make_article(gw, body=None, token=None):
    r = gw.client.post(
        "/api/v1/articles",
        headers=gw.auth(token or gw.t_alice),
        json={**ARTICLE_BODY, "acl": group_acl(gw), **(body or {})},
    )
    assert r.status_code == 201, r.text
    return r.json()


def test_article_content_negotiation_byte_identity(gw):
    # public article: the dual representation must hold for anonymous readers
    art = make_article(gw, {"acl": {**group_acl(gw), "scope": "public"}})
    # one linked asset so the mentions branch is exercised too
    ab = gw.client.post(
        "/api/v1/antibodies", headers=gw.auth(gw.t_alice),
        json={
            "kind": "Primary", "designation": "anti-PLN", "target": "PLN",
            "host_species": "rabbit", "clonality": "Monoclonal",
            "manufacturer_name": "Badger", "catalog_number": "B-1",
            "antibody_registry_id": "AB_2314218",
            "acl": group_acl(gw),
        },
    ).json()
    link = gw.client.post(
        f"/api/v1/articles/{art['article_id']}/links",
        headers=gw.auth(gw.t_alice),
        json={"asset_kind": "antibody", "asset_id": ab["antibody_id"]},
    )
    assert link.status_code == 201

    url = f"/api/v1/articles/{art['article_id']}"
    html_page = gw.client.get(url, headers={"Accept": "text/html"})
    assert html_page.status_code == 200
    assert html_page.headers["content-type"].startswith("text/html")

    bare = gw.client.get(url, headers={"Accept": "application/ld+json"})
    assert bare.status_code == 200
    assert bare.headers["content-type"].startswith("application/ld+json")
    # plain application/json negotiates the same representation
    assert gw.client.get(url, headers={"Accept": "application/json"}).content == bare.content

    start = html_page.text.index('<script type="application/ld+json">') + len(
        '<script type="application/ld+json">'
    )
    end = html_page.text.index("</script>", start)
    embedded = html_page.text[start:end].encode("utf-8")
    assert embedded == bare.content

    obj = json.loads(bare.content)
    assert obj["@type"] == "ScholarlyArticle"
    assert obj["headline"] == ARTICLE_BODY["title"]
    assert obj["author"][0]["familyName"] == "Adams"
    assert obj["isPartOf"] == {
        "@type": "Periodical",
        "name": "Journal of Test Cardiology",
        "volumeNumber": "88",
    }
    assert obj["identifier"][0] == {
        "@type": "PropertyValue", "propertyID": "DOI", "value": "10.5555/jtc.2021.9"
    }
    assert obj["mentions"][0]["name"] == "anti-PLN"
    assert obj["mentions"][0]["additionalType"] == "antibody"
    # the linked antibody carries its minted handle
    assert obj["mentions"][0]["identifier"]["propertyID"] == "Handle"


def test_article_record_and_update_permissions(gw):
    art = make_article(gw)
    url = f"/api/v1/articles/{art['article_id']}"
    rec = gw.client.get(url + "/record", headers=gw.auth(gw.t_bob))
    assert rec.status_code == 200
    assert rec.json()["links"] == []

    # bob is a plain member: read yes, write no
    denied = gw.client.patch(
        url, headers=gw.auth(gw.t_bob), json={"journal": "Hijacked"}
    )
    assert denied.status_code == 403
    ok = gw.client.patch(
        url, headers=gw.auth(gw.t_alice), json={"journal": "Renamed Journal"}
    )
    assert ok.status_code == 200
    assert ok.json()["journal"] == "Renamed Journal"

    anon = gw.client.patch(url, json={"journal": "Nameless"})
    assert anon.status_code == 401


def test_import_endpoint_uses_fixture_corpus(gw):
    r = gw.client.post(
        "/api/v1/imports/publication",
        headers=gw.auth(gw.t_alice),
        json={"pmid": "29876543"},
    )
    assert r.status_code == 200, r.text
    art = r.json()
    assert art["pmid"] == "29876543"
    assert art["journal"] == "Basic research in cardiology"
    again = gw.client.post(
        "/api/v1/imports/publication",
        headers=gw.auth(gw.t_alice),
        json={"pmid": "29876543"},
    )
    assert again.json()["article_id"] == art["article_id"]

    neither = gw.client.post(
        "/api/v1/imports/publication", headers=gw.auth(gw.t_alice), json={}
    )
    assert neither.status_code == 400
    missing = gw.client.post(
        "/api/v1/imports/publication",
        headers=gw.auth(gw.t_alice),
        json={"pmid": "424242"},
    )
    assert missing.status_code == 404


def test_exports_and_stats_endpoints(gw):
    make_article(gw)
    make_article(gw, {"doi": "10.5555/jtc.2022.1", "year": 2022, "open_access": False})

    ris = gw.client.get(
        "/api/v1/publications/export", params={"format": "ris"},
        headers=gw.auth(gw.t_alice),
    )
    assert ris.status_code == 200
    lines = [l for l in ris.text.split("\n") if l]
    assert lines[0].startswith("TY  - ")
    assert lines[-1] == "ER  - "

    csv_export = gw.client.get(
        "/api/v1/publications/export", params={"format": "csv"},
        headers=gw.auth(gw.t_alice),
    )
    assert csv_export.text.splitlines()[0] == (
        "article_id,title,authors,year,journal,doi,pmid,publication_type,open_access"
    )
    bad = gw.client.get(
        "/api/v1/publications/export", params={"format": "bibtex"},
        headers=gw.auth(gw.t_alice),
    )
    assert bad.status_code == 400

    stats = gw.client.get("/api/v1/stats/publications", headers=gw.auth(gw.t_alice))
    assert stats.json() == gw.portal.articles.compute_stats(gw.alice.user_id)
    assert stats.json()["per_year"] == [
        {"year": 2021, "count": 1}, {"year": 2022, "count": 1}
    ]
    # anonymous stats cover only public records: none here
    assert gw.client.get("/api/v1/stats/publications").json()["per_year"] == []


# -- landing pages ----------------------------------------------------


def test_landing_page_identical_for_owner_and_anonymous(gw):
    ab = gw.client.post(
        "/api/v1/antibodies", headers=gw.auth(gw.t_alice),
        json={
            "kind": "Primary", "designation": "anti-RYR2", "target": "RYR2",
            "host_species": "mouse", "clonality": "Monoclonal",
            "manufacturer_name": "Badger", "catalog_number": "B-2",
            "acl": {**group_acl(gw), "scope": "private"},
        },
    ).json()
    prefix, suffix = ab["pid"].split("/", 1)
    path = f"/landing/{prefix}/{suffix}"
    anon = gw.client.get(path)
    owner = gw.client.get(path, headers=gw.auth(gw.t_alice))
    stranger = gw.client.get(path, headers=gw.auth(gw.t_carol))
    assert anon.status_code == 200
    # the public face never varies with the requester, even for Private data
    assert anon.content == owner.content == stranger.content
    assert "anti-RYR2" in anon.text
    assert "Cardiology Lab" in anon.text

    view = gw.client.get(f"/api/v1/landing/{prefix}/{suffix}").json()
    assert view["pid"] == ab["pid"]
    assert view["object_kind"] == "antibody"
    assert view["title_or_designation"] == "anti-RYR2"

    nothing = gw.client.get(f"/landing/{prefix}/does-not-exist")
    assert nothing.status_code == 404
    assert "Unknown identifier" in nothing.text


# -- TAN batch to notebook to scans -----------------------------------


def test_tan_notebook_scan_flow(gw):
    c = gw.client
    denied = c.post(
        "/api/v1/tan-batches", headers=gw.auth(gw.t_bob), json={"count": 3}
    )
    assert denied.status_code == 403  # only facility staff mint batches

    batch = c.post(
        "/api/v1/tan-batches", headers=gw.auth(gw.t_dana), json={"count": 3}
    )
    assert batch.status_code == 200
    rows = list(csv.DictReader(io.StringIO(batch.text)))
    assert len(rows) == 3
    pid, tan = rows[0]["pid"], rows[0]["tan"]

    wrong = c.post(
        "/api/v1/notebooks", headers=gw.auth(gw.t_alice),
        json={
            "pid": pid, "tan": "WRONG0000", "group_id": gw.lab.group_id,
            "title": "Lab book 17", "storage_location": "Shelf 3",
        },
    )
    assert wrong.status_code == 403

    made = c.post(
        "/api/v1/notebooks", headers=gw.auth(gw.t_alice),
        json={
            "pid": pid, "tan": tan, "group_id": gw.lab.group_id,
            "title": "Lab book 17", "storage_location": "Shelf 3",
            "date_from": "2024-01-02", "date_to": "2024-06-30",
        },
    )
    assert made.status_code == 201, made.text
    nb = made.json()
    assert nb["pid"] == pid

    reuse = c.post(
        "/api/v1/notebooks", headers=gw.auth(gw.t_alice),
        json={
            "pid": pid, "tan": tan, "group_id": gw.lab.group_id,
            "title": "Copycat", "storage_location": "Shelf 4",
        },
    )
    assert reuse.status_code == 409  # the TAN is gone

    scan = c.post(
        f"/api/v1/notebooks/{nb['notebook_id']}/scans",
        headers=gw.auth(gw.t_alice),
        params={"filename": "pages/001.png"},
        content=b"\x89PNG fake bytes",
    )
    assert scan.status_code == 201
    listing = c.get(
        f"/api/v1/notebooks/{nb['notebook_id']}/scans", headers=gw.auth(gw.t_bob)
    )
    assert [f["name"] for f in listing.json()] == ["pages/001.png"]
    fetched = c.get(
        f"/api/v1/notebooks/{nb['notebook_id']}/scans/pages/001.png",
        headers=gw.auth(gw.t_bob),
    )
    assert fetched.content == b"\x89PNG fake bytes"
    # carol is outside the owning group
    outside = c.get(
        f"/api/v1/notebooks/{nb['notebook_id']}/scans/pages/001.png",
        headers=gw.auth(gw.t_carol),
    )
    assert outside.status_code == 403

    # the notebook PID now lands on a public page naming the notebook
    prefix, suffix = pid.split("/", 1)
    page = c.get(f"/landing/{prefix}/{suffix}")
    assert "Lab book 17" in page.text
    # an unclaimed sibling PID from the same batch stays reserved
    p2, s2 = rows[1]["pid"].split("/", 1)
    assert "Reserved notebook identifier" in c.get(f"/landing/{p2}/{s2}").text


# -- workflow cases over HTTP -----------------------------------------


def almn_case_http(gw, antibody_id):
    r = gw.client.post(
        "/api/v1/cases", headers=gw.auth(gw.t_bob),
        json={
            "kind": "ALMN",
            "group_id": gw.lab.group_id,
            "payload": {
                "research_question": "Does PLN cluster at junctions?",
                "stainings": [{"antibody_id": antibody_id, "abbreviation": "PLN"}],
            },
        },
    )
    assert r.status_code == 201, r.text
    return r.json()


def test_almn_case_lifecycle_http(gw):
    c = gw.client
    ab = c.post(
        "/api/v1/antibodies", headers=gw.auth(gw.t_alice),
        json={
            "kind": "Primary", "designation": "anti-PLN", "target": "PLN",
            "host_species": "rabbit", "clonality": "Polyclonal",
            "manufacturer_name": "Badger", "catalog_number": "B-3",
            "acl": group_acl(gw),
        },
    ).json()
    case = almn_case_http(gw, ab["antibody_id"])
    cid = case["case_id"]
    assert case["state"] == "Requested"

    # requester may not start the consultation
    nope = c.post(
        f"/api/v1/cases/{cid}/actions", headers=gw.auth(gw.t_bob),
        json={"action": "StartConsultation"},
    )
    assert nope.status_code == 403
    assert nope.json()["error"]["code"] == "unauthorized"

    start = c.post(
        f"/api/v1/cases/{cid}/actions", headers=gw.auth(gw.t_dana),
        json={"action": "StartConsultation"},
    )
    assert start.json()["state"] == "InConsultation"

    consult = c.post(
        f"/api/v1/cases/{cid}/consultation", headers=gw.auth(gw.t_dana),
        json={
            "stainings": [{"antibody_id": ab["antibody_id"], "abbreviation": "PLN"}],
            "samples": [
                {"sample_id": "h1", "species": "mouse"},
                {"sample_id": "h2", "species": "mouse"},
            ],
        },
    )
    assert consult.status_code == 200, consult.text
    labels = consult.json()["labels"]
    assert len(labels) == 2

    # consultation is a staff-console operation
    member_consult = c.post(
        f"/api/v1/cases/{cid}/consultation", headers=gw.auth(gw.t_bob),
        json={"stainings": [], "samples": []},
    )
    assert member_consult.status_code == 403

    sheet = c.get(f"/api/v1/cases/{cid}/labels.csv", headers=gw.auth(gw.t_bob))
    assert sheet.text.splitlines()[0] == "sample_id,species,staining_abbreviation,pid"

    go = c.post(
        f"/api/v1/cases/{cid}/actions", headers=gw.auth(gw.t_bob),
        json={"action": "BeginDataCollection"},
    )
    assert go.json()["state"] == "AwaitingData"

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        z.writestr("imgs/a.tif", build_tiff(width=64, height=48, bits=8))
        z.writestr("imgs/a.xml", b"<meta><stain>PLN</stain></meta>")
    stored = c.post(
        f"/api/v1/cases/{cid}/dataset", headers=gw.auth(gw.t_dana),
        content=buf.getvalue(),
    )
    assert stored.status_code == 201, stored.text
    pkg_id = stored.json()["package_id"]
    images = stored.json()["images"]
    assert images[0]["width_px"] == 64
    assert images[0]["extra"]["meta/stain"] == "PLN"

    after = c.get(f"/api/v1/cases/{cid}", headers=gw.auth(gw.t_bob)).json()
    assert after["state"] == "DataStored"
    assert after["dataset_packages"] == [pkg_id]
    # audit trail rode along: creation + 3 transitions
    assert [e["to_state"] for e in after["audit_trail"]] == [
        "Requested", "InConsultation", "LabelsIssued", "AwaitingData", "DataStored"
    ]

    got = c.get(
        f"/api/v1/packages/{pkg_id}/files/imgs/a.tif", headers=gw.auth(gw.t_bob)
    )
    assert got.status_code == 200
    anon_file = c.get(f"/api/v1/packages/{pkg_id}/files/imgs/a.tif")
    assert anon_file.status_code == 403

    # every minted label PID resolves to a sample-label landing page
    prefix, suffix = labels[0]["pid"].split("/", 1)
    page = c.get(f"/landing/{prefix}/{suffix}")
    assert page.status_code == 200
    assert "Sample label of ALMN case" in page.text

    bad = c.post(
        f"/api/v1/cases/{cid}/actions", headers=gw.auth(gw.t_dana),
        json={"action": "StartConsultation"},
    )
    assert bad.status_code == 409
    assert bad.json()["error"]["code"] == "illegal_transition"
    unchanged = c.get(f"/api/v1/cases/{cid}", headers=gw.auth(gw.t_bob)).json()
    assert unchanged["state"] == "DataStored"


def test_case_visibility_follows_acl(gw):
    ab = gw.portal.antibodies.register_antibody(
        kind="Primary", designation="x", target="y", host_species="rabbit",
        clonality="Monoclonal", manufacturer_name="m", catalog_number="1",
    )
    case = almn_case_http(gw, ab.antibody_id)
    visible = gw.client.get("/api/v1/cases", headers=gw.auth(gw.t_alice)).json()
    assert [c["case_id"] for c in visible] == [case["case_id"]]
    # carol has no membership in the owning group
    assert gw.client.get("/api/v1/cases", headers=gw.auth(gw.t_carol)).json() == []
    hidden = gw.client.get(
        f"/api/v1/cases/{case['case_id']}", headers=gw.auth(gw.t_carol)
    )
    assert hidden.status_code == 403


def test_case_responses_carry_the_permitted_actions(gw):
    ab = gw.portal.antibodies.register_antibody(
        kind="Primary", designation="x", target="y", host_species="rabbit",
        clonality="Monoclonal", manufacturer_name="m", catalog_number="1",
    )
    case = almn_case_http(gw, ab.antibody_id)
    cid = case["case_id"]
    # create response is per the requester: nothing to do at Requested
    assert case["available_actions"] == []
    as_staff = gw.client.get(f"/api/v1/cases/{cid}", headers=gw.auth(gw.t_dana)).json()
    assert as_staff["available_actions"] == ["StartConsultation"]
    as_pi = gw.client.get(f"/api/v1/cases/{cid}", headers=gw.auth(gw.t_alice)).json()
    assert as_pi["available_actions"] == []
    moved = gw.client.post(
        f"/api/v1/cases/{cid}/actions", headers=gw.auth(gw.t_dana),
        json={"action": "StartConsultation"},
    ).json()
    assert moved["available_actions"] == ["IssueLabels"]


# -- packages over HTTP -----------------------------------------------


def test_package_transactions_http(gw):
    c = gw.client
    made = c.post(
        "/api/v1/packages", headers=gw.auth(gw.t_alice),
        json={"acl": group_acl(gw), "metadata": {"content": "misc"}},
    )
    assert made.status_code == 201
    pkg = made.json()
    assert pkg["revision"] == 0

    txn = c.post(
        f"/api/v1/packages/{pkg['package_id']}/transactions",
        headers=gw.auth(gw.t_alice),
        json={
            "expected_revision": 0,
            "mutations": [
                {"op": "put", "name": "a/readme.txt",
                 "data_b64": "aGVsbG8gd29ybGQ=", "metadata": {"lang": "en"}},
                {"op": "set_package_metadata", "metadata": {"content": "docs"}},
            ],
        },
    )
    assert txn.status_code == 200, txn.text
    assert txn.json()["revision"] == 1
    assert txn.json()["package_metadata"]["content"] == "docs"

    stale = c.post(
        f"/api/v1/packages/{pkg['package_id']}/transactions",
        headers=gw.auth(gw.t_alice),
        json={"expected_revision": 0, "mutations": [{"op": "delete", "name": "a/readme.txt"}]},
    )
    assert stale.status_code == 409
    assert stale.json()["error"]["code"] == "concurrent_conflict"

    # bob can read group data but holds no write rights
    blocked = c.post(
        f"/api/v1/packages/{pkg['package_id']}/transactions",
        headers=gw.auth(gw.t_bob),
        json={"mutations": [{"op": "delete", "name": "a/readme.txt"}]},
    )
    assert blocked.status_code == 403

    data = c.get(
        f"/api/v1/packages/{pkg['package_id']}/files/a/readme.txt",
        headers=gw.auth(gw.t_bob),
    )
    assert data.content == b"hello world"

    nope = c.get(
        f"/api/v1/packages/{pkg['package_id']}/files/a/readme.txt",
        headers=gw.auth(gw.t_carol),
    )
    assert nope.status_code == 403
    grant = c.post(
        f"/api/v1/packages/{pkg['package_id']}/grants",
        headers=gw.auth(gw.t_alice),
        json={"user_id": gw.carol.user_id},
    )
    assert grant.status_code == 200
    now_ok = c.get(
        f"/api/v1/packages/{pkg['package_id']}/files/a/readme.txt",
        headers=gw.auth(gw.t_carol),
    )
    assert now_ok.content == b"hello world"

    bad_b64 = c.post(
        f"/api/v1/packages/{pkg['package_id']}/transactions",
        headers=gw.auth(gw.t_alice),
        json={"mutations": [{"op": "put", "name": "z", "data_b64": "!!!"}]},
    )
    assert bad_b64.status_code == 400

    listing = c.get("/api/v1/packages", headers=gw.auth(gw.t_bob)).json()
    assert pkg["package_id"] in [p["package_id"] for p in listing]
    assert gw.client.get("/api/v1/packages").json() == []


def test_tier_migration_endpoint_staff_only(gw):
    denied = gw.client.post(
        "/api/v1/admin/tier-migration", headers=gw.auth(gw.t_alice),
        json={"hot_capacity_bytes": 10},
    )
    assert denied.status_code == 403
    report = gw.client.post(
        "/api/v1/admin/tier-migration", headers=gw.auth(gw.t_dana),
        json={"hot_capacity_bytes": 1024, "min_candidate_size_bytes": 0},
    )
    assert report.status_code == 200
    assert report.json()["moved"] == []


# -- catalogue endpoints ----------------------------------------------


def test_preview_name_matches_library(gw):
    from fairhub.catalogues.mouse_lines import MutationSpec, generate_mouse_line_name

    body = {
        "background_strain": "C57BL/6J",
        "mutations": [
            {"mutation_kind": "TargetedMutation", "gene_symbol": "Pln",
             "serial": 2, "lab_code": "Ukb"},
        ],
    }
    r = gw.client.post(
        "/api/v1/mouse-lines/preview-name", headers=gw.auth(gw.t_bob), json=body
    )
    assert r.status_code == 200
    expected = generate_mouse_line_name(
        "C57BL/6J", [MutationSpec.from_dict(m) for m in body["mutations"]]
    )
    assert r.json() == {"name": expected}
    assert gw.client.post("/api/v1/mouse-lines/preview-name", json=body).status_code == 401
    bad = gw.client.post(
        "/api/v1/mouse-lines/preview-name", headers=gw.auth(gw.t_bob),
        json={"background_strain": "C57BL/6J",
              "mutations": [{"mutation_kind": "Transgene", "gene_symbol": "",
                             "construct": "", "serial": 1, "lab_code": "Goe"}]},
    )
    assert bad.status_code == 400


def test_antibody_csv_round_trip_http(gw):
    gw.client.post(
        "/api/v1/antibodies", headers=gw.auth(gw.t_alice),
        json={
            "kind": "Secondary", "designation": "goat anti-rabbit",
            "target": "rabbit IgG", "host_species": "goat",
            "clonality": "Polyclonal", "manufacturer_name": "Badger",
            "catalog_number": "B-9", "acl": group_acl(gw),
        },
    )
    out = gw.client.get("/api/v1/antibodies/export.csv", headers=gw.auth(gw.t_alice))
    assert out.status_code == 200

    fresh = gw.client.post(
        "/api/v1/antibodies/import.csv", headers=gw.auth(gw.t_alice),
        content=out.content,
    )
    assert fresh.status_code == 200
    assert fresh.json() == {"imported": 1}
    again = gw.client.get("/api/v1/antibodies/export.csv", headers=gw.auth(gw.t_alice))
    assert again.content == out.content

    broken = gw.client.post(
        "/api/v1/antibodies/import.csv", headers=gw.auth(gw.t_alice),
        content=b"wrong,header\r\n1,2\r\n",
    )
    assert broken.status_code == 400
    assert broken.json()["error"]["code"] == "header_mismatch"


def test_cell_line_naming_http(gw):
    made = gw.client.post(
        "/api/v1/cell-lines", headers=gw.auth(gw.t_alice),
        json={
            "kind": "PatientDerived", "diagnosis": "DCM",
            "donor_pseudonym": "P-0007", "ethics_approval_reference": "EK-12/24",
            "request_standard_name": True, "institution_code": "UMG",
            "acl": group_acl(gw),
        },
    )
    assert made.status_code == 201, made.text
    cell = made.json()
    assert cell["standardized_name"] == "UMGi001-A"

    pending = gw.client.post(
        "/api/v1/cell-lines", headers=gw.auth(gw.t_alice),
        json={
            "kind": "PatientDerived", "diagnosis": "HCM",
            "donor_pseudonym": "P-0008", "ethics_approval_reference": "EK-12/24",
            "acl": group_acl(gw),
        },
    ).json()
    assert pending["standardized_name"] is None
    named = gw.client.post(
        f"/api/v1/cell-lines/{pending['cell_id']}/request-name",
        headers=gw.auth(gw.t_alice),
        json={"institution_code": "UMG"},
    )
    assert named.json()["standardized_name"] == "UMGi002-A"
