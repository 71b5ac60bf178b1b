"""Release acceptance gate.

One test per release criterion, each at its full stated scale, each
printing a single [PASS]/[FAIL] verdict line on the real stdout so the
checklist survives pytest's output capture.  Every oracle here is
independent of the code under test: hand-written truth tables, shadow
models, brute-force simulators, and byte-level format readers.
"""

import json
import random
import sys
import threading
import zipfile
from contextlib import contextmanager
from pathlib import Path
from types import SimpleNamespace

import pytest

from fairhub.core import AccessScope, Directory, PasswordHasher, Role, Scope
from fairhub.errors import FairhubError
from fairhub.catalogues import (
    AntibodyCatalogue,
    CellLineCatalogue,
    MockNamingService,
    NamingClient,
    export_antibodies_csv,
    export_cell_lines_csv,
    import_antibodies_csv,
    import_cell_lines_csv,
)
from fairhub.catalogues.mouse_lines import (
    MutationKind,
    MutationSpec,
    generate_mouse_line_name,
)
from fairhub.gateway import Portal, create_app
from fairhub.pidreg.client import (
    EndpointConfig,
    EndpointRouter,
    PidServiceClient,
    WireProtocolError,
    WireTape,
)
from fairhub.pidreg.mock_service import MockPidService
from fairhub.pidreg.registry import ObjectKind, PidRegistry, TanAlreadyConsumed
from fairhub.pkgstore import (
    DeleteFile,
    PackageStore,
    PathViolation,
    PutFile,
    SetFileMetadata,
    SetPackageMetadata,
)
from fairhub.pubreg.exports import from_csv, from_json, to_csv, to_json, to_ris
from fairhub.pubreg.imports import (
    BibliographicImporter,
    DataCiteClient,
    EuropePmcClient,
)
from fairhub.pubreg.registry import ArticleRegistry, Author, ScholarlyArticle
from fairhub.workflows import (
    ACTION_TABLE,
    CaseKind,
    EchoState,
    IllegalTransition,
    WorkflowEngine,
    extract_tiff_metadata,
    ingest_dataset_zip,
)

from conftest import FAST_PARAMS, make_orcid
from test_catalogues import NAME_CASES, register_cell, seed_antibodies
from test_pkgstore import MigrationSimulator
from test_pubreg import parse_ris, random_records
from test_workflows import ALMN_PAYLOAD, ECHO_PAYLOAD, build_tiff, make_zip, replay_audit

FIXTURES = Path(__file__).parent / "fixtures"
PREFIX = "21.11124"
OPEN = AccessScope(Scope.PUBLIC)


_CAPSYS = None


@pytest.fixture(autouse=True)
def _verdict_channel(capsys):
    # hold the capture handle so criterion() can punch verdict lines
    # through pytest's capture onto the real terminal
    global _CAPSYS
    _CAPSYS = capsys
    yield
    _CAPSYS = None


def _emit(line):
    if _CAPSYS is not None:
        with _CAPSYS.disabled():
            print(line, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)


@contextmanager
def criterion(name):
    """Emit the verdict for one checklist item, pass or fail."""
    try:
        yield
    except BaseException:
        _emit(f"[FAIL] {name}")
        raise
    _emit(f"[PASS] {name}")


def fresh_directory():
    return Directory(PasswordHasher(FAST_PARAMS))


def make_pid_registry(journal=None):
    service = MockPidService()
    endpoint = EndpointConfig(
        name="mock", base_url="https://pid.invalid", prefix=PREFIX, wsgi_app=service
    )
    router = EndpointRouter()
    router.add(endpoint, default=True)
    return PidRegistry(router, journal_path=journal), endpoint


# -- 1. access control ------------------------------------------------


def test_access_control_truth_table():
    with criterion("access-control truth table: 4 scopes x 6 requester classes, 24/24"):
        d = fresh_directory()
        # the owner deliberately holds no membership: ownership alone
        # must carry the owner column
        owner = d.create_user("Own", "Olga", make_orcid(61), "pw")
        member = d.create_user("Mem", "Mia", make_orcid(62), "pw")
        pi = d.create_user("Pi", "Pia", make_orcid(63), "pw")
        stranger = d.create_user("Str", "Stan", make_orcid(64), "pw")
        project_user = d.create_user("Prj", "Paula", make_orcid(65), "pw")
        owning = d.create_group("Owning Group")
        other = d.create_group("Other Group")
        d.set_membership(member.user_id, owning.group_id, Role.MEMBER)
        d.set_membership(pi.user_id, owning.group_id, Role.PRINCIPAL_INVESTIGATOR)
        d.set_membership(stranger.user_id, other.group_id, Role.MEMBER)

        requesters = {
            "anonymous": None,
            "stranger": stranger.user_id,
            "project_user": project_user.user_id,
            "group_member": member.user_id,
            "owner": owner.user_id,
            "group_pi": pi.user_id,
        }
        # hand-derived: rows are scopes, columns the requester classes above
        expected = {
            Scope.PUBLIC: {
                "anonymous": True, "stranger": True, "project_user": True,
                "group_member": True, "owner": True, "group_pi": True,
            },
            Scope.PROJECT: {
                "anonymous": False, "stranger": True, "project_user": True,
                "group_member": True, "owner": True, "group_pi": True,
            },
            Scope.GROUP: {
                "anonymous": False, "stranger": False, "project_user": False,
                "group_member": True, "owner": True, "group_pi": True,
            },
            Scope.PRIVATE: {
                "anonymous": False, "stranger": False, "project_user": False,
                "group_member": False, "owner": True, "group_pi": True,
            },
        }
        checked = 0
        for scope, row in expected.items():
            acl = AccessScope(scope, owner_user_id=owner.user_id,
                              owning_group_id=owning.group_id)
            for cls, user_id in requesters.items():
                got = d.can_access(user_id, acl)
                assert got is row[cls], f"{scope.value} x {cls}: got {got}"
                checked += 1
        assert checked == 24


# -- 2. PID lifecycle -------------------------------------------------


def test_pid_lifecycle_and_tan_concurrency():
    with criterion(
        "pid lifecycle: 1000 mints collision-free + wire record/replay + "
        "100 TANs under 8-way concurrency"
    ):
        registry, endpoint = make_pid_registry()
        minted = [
            registry.mint_pid(
                PREFIX, f"https://portal.invalid/objects/{i}", ObjectKind.DATASET
            )
            for i in range(1000)
        ]
        assert len({p.suffix for p in minted}) == 1000, "suffix collision"
        for i, p in enumerate(minted):
            assert (
                registry.resolve_pid(PREFIX, p.suffix).target_url
                == f"https://portal.invalid/objects/{i}"
            )
        # and the backing service agrees over the wire for every handle
        probe = PidServiceClient(endpoint)
        for i, p in enumerate(minted):
            assert probe.lookup(PREFIX, p.suffix) == f"https://portal.invalid/objects/{i}"
        probe.close()

        # record a session against the mock, then replay it with no
        # service attached: byte-exact requests, identical results
        tape = WireTape()
        recorder = PidServiceClient(
            EndpointConfig(name="rec", base_url="https://pid.invalid",
                           prefix=PREFIX, wsgi_app=MockPidService()),
            tape=tape,
        )
        def session(client):
            out = []
            for i in range(25):
                out.append(client.register(PREFIX, f"rt{i}", f"https://t/{i}"))
            for i in range(25):
                out.append(client.lookup(PREFIX, f"rt{i}"))
            out.append(client.lookup(PREFIX, "never-registered"))
            out.append(client.register(PREFIX, "rt0", "https://t/updated"))
            out.append(client.lookup(PREFIX, "rt0"))
            return out

        live_results = session(recorder)
        recorder.close()
        assert len(tape) == 53
        replayer = PidServiceClient(
            EndpointConfig(name="rep", base_url="https://pid.invalid", prefix=PREFIX),
            replay=tape,
        )
        assert session(replayer) == live_results
        replayer.close()
        diverging = PidServiceClient(
            EndpointConfig(name="div", base_url="https://pid.invalid", prefix=PREFIX),
            replay=tape,
        )
        with pytest.raises(WireProtocolError):
            diverging.lookup(PREFIX, "not-what-the-tape-says")
        diverging.close()

        # one-time codes: 8 threads race over one batch of 100
        pairs = registry.mint_tan_batch(PREFIX, 100, ObjectKind.NOTEBOOK)
        barrier = threading.Barrier(8)
        wins: list[list[str]] = [[] for _ in range(8)]

        def contender(slot):
            rng = random.Random(slot)
            order = list(pairs)
            rng.shuffle(order)
            barrier.wait()
            for rec, tan in order:
                try:
                    registry.consume_tan(PREFIX, rec.suffix, tan, f"user-{slot}")
                    wins[slot].append(rec.suffix)
                except TanAlreadyConsumed:
                    pass

        threads = [threading.Thread(target=contender, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        total = [s for slot in wins for s in slot]
        assert len(total) == 100, f"{len(total)} successful consumptions, want exactly 100"
        assert len(set(total)) == 100
        assert set(total) == {rec.suffix for rec, _ in pairs}


# -- 3. storage ACID --------------------------------------------------


def shadow_apply(model, mutations):
    """Pure model of one transaction; None when the store must reject it."""
    files = dict(model["files"])
    meta = dict(model["meta"])
    for mut in mutations:
        if isinstance(mut, PutFile):
            files[mut.name] = mut.data
        elif isinstance(mut, DeleteFile):
            if mut.name not in files:
                return None
            del files[mut.name]
        elif isinstance(mut, SetPackageMetadata):
            meta = dict(mut.metadata)
        elif isinstance(mut, SetFileMetadata):
            if mut.name not in files:
                return None
    return {"files": files, "meta": meta, "revision": model["revision"] + 1}


class Boom(RuntimeError):
    pass


def test_storage_acid_under_fault_injection(tmp_path):
    with criterion(
        "storage ACID: 10000 randomized transactions, fault injection at every "
        "stage, crash-restart retention"
    ):
        rng = random.Random(0xAC1D)
        root = tmp_path / "acid"
        store = PackageStore(root, sync=False)
        shadow = {}
        for _ in range(8):
            pkg = store.create_package(OPEN)
            shadow[pkg.package_id] = {"files": {}, "meta": {}, "revision": 0}
        package_ids = list(shadow)

        committed = aborted = faulted = acked_crashes = 0
        fault_cycle = 0
        for step in range(10_000):
            package_id = rng.choice(package_ids)
            model = shadow[package_id]
            mutations = []
            for _ in range(rng.randint(1, 3)):
                roll = rng.random()
                if roll < 0.55 or not model["files"]:
                    mutations.append(
                        PutFile(
                            f"f{rng.randrange(40)}.bin",
                            rng.randbytes(rng.randint(0, 120)),
                        )
                    )
                elif roll < 0.80:
                    mutations.append(DeleteFile(rng.choice(list(model["files"]))))
                elif roll < 0.90:
                    mutations.append(SetPackageMetadata({"step": str(step)}))
                else:
                    mutations.append(
                        SetFileMetadata(rng.choice(list(model["files"])), {"s": str(step)})
                    )

            if step % 2000 == 1999:
                # acknowledged commit, then the process "dies" before the
                # in-memory apply: restart must retain it
                def crash_hook(point):
                    if point == "after_journal":
                        raise Boom(point)

                with pytest.raises(Boom):
                    store.run_transaction(package_id, mutations, fault_hook=crash_hook)
                after = shadow_apply(model, mutations)
                assert after is not None  # generator only picked valid targets
                shadow[package_id] = after
                store.close()
                store = PackageStore(root, sync=False)
                reloaded = store.get_package(package_id)
                assert reloaded.revision == after["revision"]
                assert sorted(reloaded.files) == sorted(after["files"])
                acked_crashes += 1
                continue

            if rng.random() < 0.40:
                # cycle the injection point so every stage, including each
                # mutation index, gets hit over the run
                points = [f"apply:{i}" for i in range(len(mutations))]
                points += ["before_blobs", "before_journal"]
                point = points[fault_cycle % len(points)]
                fault_cycle += 1

                def hook(stage, point=point):
                    if stage == point:
                        raise Boom(stage)

                before = store.list_package(package_id)
                with pytest.raises((Boom, FairhubError)):
                    store.run_transaction(package_id, mutations, fault_hook=hook)
                assert store.list_package(package_id) == before, "aborted txn leaked"
                faulted += 1
                continue

            after = shadow_apply(model, mutations)
            if after is None:
                before = store.list_package(package_id)
                with pytest.raises(FairhubError):
                    store.run_transaction(package_id, mutations)
                assert store.list_package(package_id) == before
                aborted += 1
            else:
                result = store.run_transaction(package_id, mutations)
                assert result.revision == after["revision"]
                shadow[package_id] = after
                committed += 1

            if step % 500 == 0:
                for _ in range(3):
                    pid = rng.choice(package_ids)
                    if shadow[pid]["files"]:
                        name = rng.choice(list(shadow[pid]["files"]))
                        data, _entry = store.get_file(pid, name)
                        assert data == shadow[pid]["files"][name]

        assert committed + aborted + faulted + acked_crashes == 10_000
        assert committed > 4000 and faulted > 3000

        # full final audit, then once more across a restart
        def verify_everything(s):
            for pid, model in shadow.items():
                got = s.get_package(pid)
                assert got.revision == model["revision"]
                assert sorted(got.files) == sorted(model["files"])
                for name, payload in model["files"].items():
                    assert s.get_file(pid, name)[0] == payload

        verify_everything(store)
        store.close()
        reopened = PackageStore(root, sync=False)
        verify_everything(reopened)
        reopened.close()


# -- 4. tier migration ------------------------------------------------


def test_tier_migration_matches_simulator(tmp_path):
    with criterion("tier migration: 500+ file access log equals brute-force simulator"):
        rng = random.Random(0x713)
        store = PackageStore(tmp_path / "tiers", sync=False)
        sim = MigrationSimulator()
        packages = [store.create_package(OPEN).package_id for _ in range(6)]
        live = []
        step = 0
        # grow to 520 hot files, then stir with reads/overwrites/deletes
        while len(live) < 520:
            pid = rng.choice(packages)
            name = f"f{step}.bin"
            size = rng.randint(1, 5000)
            store.run_transaction(pid, [PutFile(name, bytes(size))])
            sim.put(pid, name, size)
            live.append((pid, name))
            step += 1
        for _ in range(600):
            roll = rng.random()
            if roll < 0.5:
                pid, name = rng.choice(live)
                store.get_file(pid, name)
                sim.get(pid, name)
            elif roll < 0.8:
                pid, name = rng.choice(live)
                size = rng.randint(1, 5000)
                store.run_transaction(pid, [PutFile(name, bytes(size))])
                sim.put(pid, name, size)
            elif len(live) > 510:
                pid, name = live.pop(rng.randrange(len(live)))
                store.run_transaction(pid, [DeleteFile(name)])
                sim.delete(pid, name)
        assert len(live) >= 500
        capacity = rng.randint(100_000, 600_000)
        min_size = rng.choice([0, 1, 800])
        report = store.migrate_tiers(capacity, min_size)
        moves, usage, overflow = sim.expected_moves(capacity, min_size)
        assert report.moved == moves, "demotion order diverges from simulator"
        assert report.hot_bytes_after == usage
        assert report.residual_overflow == overflow
        store.close()


# -- 5. bibliographic import ------------------------------------------


def test_bibliographic_import_replay():
    with criterion("bibliographic import: fixture replay field-exact, re-import idempotent"):
        d = fresh_directory()
        registry = ArticleRegistry(d)
        importer = BibliographicImporter(
            registry,
            EuropePmcClient("https://www.ebi.ac.uk/europepmc", mode="fixture",
                            fixture_dir=FIXTURES),
            DataCiteClient("https://api.datacite.org", mode="fixture",
                           fixture_dir=FIXTURES),
        )

        def count():
            return len(registry.export_state()["articles"])

        for pmid in ("29876543", "31234567"):
            raw = json.loads(
                (FIXTURES / f"europepmc_{pmid}.json").read_text("utf-8")
            )["resultList"]["result"][0]
            art = importer.import_by_pmid(pmid)
            assert art.title == raw["title"]
            assert art.year == int(raw["pubYear"])
            assert art.pmid == raw["pmid"]
            assert art.doi == raw.get("doi")
            assert art.journal == raw["journalInfo"]["journal"]["title"]
            assert art.volume == raw["journalInfo"].get("volume")
            assert art.start_page == raw["pageInfo"].split("-")[0]
            assert art.open_access == (raw.get("isOpenAccess") == "Y")
            expected_authors = [
                (a["lastName"], a.get("firstName", a.get("initials", "")))
                for a in raw["authorList"]["author"]
            ]
            assert [(a.family, a.given) for a in art.authors] == expected_authors

        for doi in ("10.5555/fhub.2020.17", "10.25625/NC9TF6"):
            raw = json.loads(
                (FIXTURES / f"datacite_{doi.lower().replace('/', '_')}.json")
                .read_text("utf-8")
            )["data"]["attributes"]
            art = importer.import_by_doi(doi)
            assert art.title == raw["titles"][0]["title"]
            assert art.year == int(raw["publicationYear"])
            assert art.doi == raw["doi"].lower()
            assert art.publication_type == raw["types"]["resourceTypeGeneral"]
            expected = [
                (c["familyName"], c.get("givenName", ""))
                for c in raw["creators"]
            ]
            assert [(a.family, a.given) for a in art.authors] == expected

        baseline = count()
        assert baseline == 4
        first_ids = {a.pmid or a.doi: a.article_id
                     for a in (importer.import_by_pmid("29876543"),
                               importer.import_by_pmid("31234567"),
                               importer.import_by_doi("10.5555/fhub.2020.17"),
                               importer.import_by_doi("10.25625/NC9TF6"))}
        assert count() == baseline, "re-import created duplicates"
        assert len(first_ids) == 4


# -- 6. format round trips --------------------------------------------


def test_format_round_trips():
    with criterion(
        "format round trips: 100+ records per kind CSV/JSON byte-identical, "
        "RIS grammar clean"
    ):
        rng = random.Random(0x0F0F)
        d = fresh_directory()

        # publications: CSV, JSON, and the RIS grammar
        env = SimpleNamespace(registry=ArticleRegistry(d))
        articles = random_records(env, rng, 120)
        csv_first = to_csv(articles)
        rebuilt = [
            ScholarlyArticle(
                article_id=rec["article_id"],
                title=rec["title"],
                authors=[Author.from_dict(a) for a in rec["authors"]],
                year=rec["year"],
                journal=rec["journal"],
                publication_type=rec["publication_type"],
                open_access=rec["open_access"],
                doi=rec["doi"],
                pmid=rec["pmid"],
            )
            for rec in from_csv(csv_first)
        ]
        assert to_csv(rebuilt) == csv_first
        json_first = to_json(articles)
        assert to_json(from_json(json_first)) == json_first
        ris_records = parse_ris(to_ris(articles))  # reader enforces the grammar
        assert len(ris_records) == 120
        for record in ris_records:
            assert record[0][0] == "TY" and record[-1] == ("ER", "")

        # antibody catalogue CSV
        viewer = d.create_user("View", "Vera", make_orcid(71), "pw")
        antibodies = AntibodyCatalogue(d)
        seed_antibodies(antibodies, rng, 110)
        ab_csv = export_antibodies_csv(antibodies, viewer.user_id)
        ab_fresh = AntibodyCatalogue(d)
        assert len(import_antibodies_csv(ab_fresh, ab_csv)) == 110
        assert export_antibodies_csv(ab_fresh, viewer.user_id) == ab_csv

        # cell line catalogue CSV, parents included
        naming = NamingClient("https://naming.invalid", wsgi_app=MockNamingService())
        cells = CellLineCatalogue(d, naming_client=naming)
        roots = []
        for i in range(60):
            named = rng.random() < 0.5
            roots.append(
                register_cell(
                    cells,
                    donor_pseudonym=f"D-{i:04d}",
                    diagnosis=rng.choice(["DCM", "HCM", "healthy control"]),
                    ethics_approval_reference=f"EK-{i}/22",
                    request_standard_name=named,
                    institution_code="UMG" if named else None,
                )
            )
        for _ in range(50):
            parent = rng.choice(roots)
            register_cell(
                cells,
                kind="GeneticallyModified",
                donor_pseudonym=parent.donor_pseudonym,
                parent_cell_id=parent.cell_id,
            )
        cl_csv = export_cell_lines_csv(cells, viewer.user_id)
        cl_fresh = CellLineCatalogue(d)
        assert len(import_cell_lines_csv(cl_fresh, cl_csv)) == 110
        assert export_cell_lines_csv(cl_fresh, viewer.user_id) == cl_csv


# -- 7. mouse nomenclature --------------------------------------------


LAB_CODES = ["Goe", "Ukb", "Mpi", "Jrs", "Abc"]
STRAINS = ["C57BL/6J", "C57BL/6N", "FVB/N", "129S4", "BALB/c"]
GENES = ["Pln", "Myh6", "Myh7", "Scn5a", "Gja1", "Tnnt2", "Camk2d"]
CONSTRUCTS = ["CAG-GFP", "Thy1-YFP", "aMHC-Cre", "TRE-hPLN"]


def random_mutation(rng):
    kind = rng.choice(list(MutationKind))
    return MutationSpec(
        gene_symbol=rng.choice(GENES),
        mutation_kind=kind,
        lab_code=rng.choice(LAB_CODES),
        serial=rng.randint(1, 99),
        construct=rng.choice(CONSTRUCTS) if kind is MutationKind.TRANSGENE else None,
    )


def test_mouse_nomenclature():
    with criterion("mouse nomenclature: 10 hand-derived cases exact + determinism x1000"):
        assert len(NAME_CASES) == 10
        for strain, mutations, expected in NAME_CASES:
            assert generate_mouse_line_name(strain, mutations) == expected

        rng = random.Random(0x90E)
        for _ in range(1000):
            strain = rng.choice(STRAINS)
            mutations = [random_mutation(rng) for _ in range(rng.randint(0, 4))]
            first = generate_mouse_line_name(strain, mutations)
            again = generate_mouse_line_name(strain, mutations)
            through_dict = generate_mouse_line_name(
                strain, [MutationSpec.from_dict(m.to_dict()) for m in mutations]
            )
            assert first == again == through_dict


# -- 8. workflow state machines ---------------------------------------


def make_engine():
    d = fresh_directory()
    requester = d.create_user("Req", "Rita", make_orcid(81), "pw")
    staff = d.create_user("Sta", "Sam", make_orcid(82), "pw")
    evaluator = d.create_user("Eva", "Enid", make_orcid(83), "pw")
    lab = d.create_group("Lab")
    core = d.create_group("Core")
    d.set_membership(requester.user_id, lab.group_id, Role.MEMBER)
    d.set_membership(evaluator.user_id, lab.group_id, Role.MEMBER)
    d.set_membership(staff.user_id, core.group_id, Role.FACILITY_STAFF)
    engine = WorkflowEngine(
        d,
        antibody_exists={"ab-1", "ab-2"}.__contains__,
        mouse_exists={"mouse-1", "mouse-2"}.__contains__,
    )
    return SimpleNamespace(
        engine=engine, lab=lab.group_id,
        requester=requester.user_id, staff=staff.user_id,
        evaluator=evaluator.user_id,
    )


def run_walk(wf, rng):
    kind = rng.choice([CaseKind.ALMN, CaseKind.ECHO])
    payload = dict(ALMN_PAYLOAD if kind is CaseKind.ALMN else ECHO_PAYLOAD)
    case = wf.engine.create_case(kind, wf.requester, payload, wf.lab)
    actors = {"requester": wf.requester, "staff": wf.staff, "evaluator": wf.evaluator}
    for _ in range(rng.randint(0, 10)):
        options = []
        for action, (frm, _to, roles) in ACTION_TABLE[kind].items():
            if frm != case.state or action == "AssignEvaluator":
                continue
            for role in sorted(roles):
                if role == "evaluator" and case.payload.get("evaluator") != wf.evaluator:
                    continue
                options.append((action, role))
        if kind is CaseKind.ECHO and case.state == EchoState.FINISHED.value:
            options.append(("__assign__", "staff"))
        if not options:
            break
        action, role = rng.choice(options)
        if action == "__assign__":
            wf.engine.assign_evaluator(case.case_id, wf.evaluator, wf.staff)
        else:
            wf.engine.transition_case(case.case_id, actors[role], action)
    return case


def test_workflow_state_machines():
    with criterion(
        "workflows: 10000 legal walks audit-replay exact + 1000 illegal "
        "actions rejected stateless"
    ):
        wf = make_engine()
        rng = random.Random(0xF5A1)
        replayed = 0
        for _ in range(10_000):
            case = run_walk(wf, rng)
            assert replay_audit(case) == case.state
            replayed += 1
        assert replayed == 10_000

        rejected = 0
        while rejected < 1000:
            case = run_walk(wf, rng)
            table = ACTION_TABLE[case.kind]
            illegal = [a for a, (frm, _, _) in table.items() if frm != case.state]
            illegal.append("NotAnAction")
            action = rng.choice(illegal)
            before = (case.state, len(case.audit_trail))
            with pytest.raises(IllegalTransition):
                wf.engine.transition_case(case.case_id, wf.staff, action)
            assert (case.state, len(case.audit_trail)) == before
            rejected += 1
        assert rejected == 1000


# -- 9. parsers and zip safety ----------------------------------------


def test_parsers_and_zip_safety(tmp_path):
    with criterion(
        "parsers: 50 generated TIFFs exact, 10000 fuzz buffers crash-free, "
        "zip paths preserved and traversal atomic"
    ):
        rng = random.Random(0x7155)
        for _ in range(50):
            order = rng.choice(["II", "MM"])
            width = rng.randint(1, 100_000)
            height = rng.randint(1, 100_000)
            bits = rng.choice([1, 8, 12, 16])
            meta = extract_tiff_metadata(
                build_tiff(width=width, height=height, bits=bits, order=order,
                           ifd_offset=rng.choice([8, 30]))
            )
            assert (meta.width_px, meta.height_px, meta.bits_per_sample) == (
                width, height, bits
            )

        bases = [
            build_tiff(width=640, height=480, bits=8),
            build_tiff(width=9, height=9, bits=16, order="MM", ifd_offset=40),
            build_tiff(width=512, height=256, bits_values=(8, 8, 8)),
        ]
        buffers = []
        for _ in range(4000):
            buffers.append(rng.randbytes(rng.randint(0, 200)))
        for base in bases:
            for cut in range(len(base)):
                buffers.append(base[:cut])
        while len(buffers) < 10_000:
            mutated = bytearray(rng.choice(bases))
            for _ in range(rng.randint(1, 8)):
                mutated[rng.randrange(len(mutated))] = rng.randrange(256)
            buffers.append(bytes(mutated))
        assert len(buffers) >= 10_000
        for buf in buffers:
            try:
                extract_tiff_metadata(buf)
            except FairhubError:
                pass  # typed rejection is the contract; anything else fails

        # zip ingestion through a real case
        wf = make_engine()
        registry, _ = make_pid_registry()
        store = PackageStore(tmp_path / "ingest", sync=False)
        wf.engine.pid_registry = registry
        wf.engine.package_store = store
        case = wf.engine.create_case(CaseKind.ALMN, wf.requester, dict(ALMN_PAYLOAD), wf.lab)
        wf.engine.transition_case(case.case_id, wf.staff, "StartConsultation")
        wf.engine.transition_case(case.case_id, wf.staff, "IssueLabels")
        wf.engine.transition_case(case.case_id, wf.requester, "BeginDataCollection")

        names = [f"plate{i // 5}/well{i % 5}/img{i}.tif" for i in range(20)]
        names += [f"plate{i // 5}/well{i % 5}/notes{i}.txt" for i in range(5)]
        archive = make_zip({
            name: build_tiff(width=32, height=32) if name.endswith(".tif") else b"note"
            for name in names
        })
        package_id, _images = ingest_dataset_zip(
            wf.engine, case.case_id, archive, actor=wf.staff
        )
        stored = store.get_package(package_id)
        assert sorted(stored.files) == sorted(names), "entry paths must survive intact"

        evil_case = wf.engine.create_case(
            CaseKind.ALMN, wf.requester, dict(ALMN_PAYLOAD), wf.lab
        )
        wf.engine.transition_case(evil_case.case_id, wf.staff, "StartConsultation")
        wf.engine.transition_case(evil_case.case_id, wf.staff, "IssueLabels")
        wf.engine.transition_case(evil_case.case_id, wf.requester, "BeginDataCollection")
        packages_before = len(store.packages())
        for bad in ("../escape.bin", "/abs.bin", "inner/../../out.bin", "a\\b.bin"):
            buf_zip = {"legit.txt": b"ok", bad: b"evil"}
            import io
            buf = io.BytesIO()
            with zipfile.ZipFile(buf, "w") as z:
                for name, data in buf_zip.items():
                    z.writestr(zipfile.ZipInfo(name), data)
            with pytest.raises(PathViolation):
                ingest_dataset_zip(wf.engine, evil_case.case_id, buf.getvalue(),
                                   actor=wf.staff)
            assert len(store.packages()) == packages_before, "partial ingest leaked"
            assert evil_case.state == "AwaitingData"
            assert evil_case.dataset_packages == []
        store.close()


# -- 10. content negotiation ------------------------------------------


def test_content_negotiation_and_landing_identity(tmp_path):
    with criterion(
        "content negotiation: 20 articles dual-representation byte-identical, "
        "landing pages requester-independent"
    ):
        from fastapi.testclient import TestClient

        portal = Portal(tmp_path / "portal", hasher=PasswordHasher(FAST_PARAMS))
        d = portal.directory
        owner = d.create_user("Own", "Olga", make_orcid(91), "pw-own")
        outsider = d.create_user("Out", "Omar", make_orcid(92), "pw-out")
        lab = d.create_group("Lab")
        d.set_membership(owner.user_id, lab.group_id, Role.PRINCIPAL_INVESTIGATOR)
        client = TestClient(create_app(portal), raise_server_exceptions=False)

        def login(orcid, pw):
            r = client.post("/api/v1/auth/login",
                            json={"username_or_orcid": orcid, "password": pw})
            assert r.status_code == 200
            return {"Authorization": f"Bearer {r.json()['token']}"}

        own_h = login(owner.orcid, "pw-own")
        out_h = login(outsider.orcid, "pw-out")

        antibody = client.post(
            "/api/v1/antibodies", headers=own_h,
            json={
                "kind": "Primary", "designation": "anti-PLN probe", "target": "PLN",
                "host_species": "rabbit", "clonality": "Monoclonal",
                "manufacturer_name": "ExampleBio", "catalog_number": "c-1",
                "acl": {"scope": "private", "owner_user_id": owner.user_id,
                        "owning_group_id": lab.group_id},
            },
        ).json()

        rng = random.Random(0x9E90)
        article_ids = []
        for i in range(20):
            body = {
                "title": f"Negotiated finding {i}",
                "authors": [
                    {"family": f"Fam{i}", "given": "Gia",
                     "orcid": make_orcid(1000 + i) if i % 3 == 0 else None}
                ],
                "year": 1995 + i,
                "journal": "" if i % 5 == 0 else f"Journal {i % 4}",
                "publication_type": "Journal Article",
                "open_access": bool(i % 2),
                "doi": f"10.5555/neg.{i}" if i % 4 else None,
                "pmid": str(40_000_000 + i) if i % 3 else None,
                "volume": str(10 + i) if i % 2 else None,
                "start_page": str(100 + i) if i % 2 else None,
                "acl": {"scope": "public", "owner_user_id": owner.user_id,
                        "owning_group_id": lab.group_id},
            }
            made = client.post("/api/v1/articles", headers=own_h, json=body)
            assert made.status_code == 201, made.text
            article_ids.append(made.json()["article_id"])
        # a few carry linked assets so the nested entries are covered
        for article_id in article_ids[:4]:
            linked = client.post(
                f"/api/v1/articles/{article_id}/links", headers=own_h,
                json={"asset_kind": "antibody", "asset_id": antibody["antibody_id"]},
            )
            assert linked.status_code == 201

        marker = '<script type="application/ld+json">'
        for article_id in article_ids:
            url = f"/api/v1/articles/{article_id}"
            page = client.get(url, headers={"Accept": "text/html"})
            bare = client.get(url, headers={"Accept": "application/ld+json"})
            assert page.status_code == 200 and bare.status_code == 200
            start = page.text.index(marker) + len(marker)
            end = page.text.index("</script>", start)
            assert page.text[start:end].encode("utf-8") == bare.content
            # the negotiated body does not depend on who asks
            assert client.get(url, headers={"Accept": "application/ld+json",
                                            **own_h}).content == bare.content

        line = client.post(
            "/api/v1/mouse-lines", headers=own_h,
            json={
                "background_strain": "C57BL/6J",
                "originating_lab": "Lab",
                "mutations": [{"gene_symbol": "Pln",
                               "mutation_kind": "TargetedMutation",
                               "lab_code": "Goe", "serial": 1}],
                "acl": {"scope": "group", "owner_user_id": owner.user_id,
                        "owning_group_id": lab.group_id},
            },
        ).json()

        for pid in (antibody["pid"], line["pid"]):
            prefix, suffix = pid.split("/", 1)
            path = f"/landing/{prefix}/{suffix}"
            anonymous = client.get(path)
            as_owner = client.get(path, headers=own_h)
            as_outsider = client.get(path, headers=out_h)
            assert anonymous.status_code == 200
            assert anonymous.content == as_owner.content == as_outsider.content
        client.close()
