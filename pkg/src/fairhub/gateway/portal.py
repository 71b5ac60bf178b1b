"""Composition root: wires every module into one portal instance.

The portal owns the directory, PID registry, package store, registries,
and workflow engine, persists their state under one data directory, and
resolves PIDs to public landing views.  Both the HTTP app and the CLI
operate exclusively through this object.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from ..catalogues import (
    AntibodyCatalogue,
    CellLineCatalogue,
    MockNamingService,
    MouseLineCatalogue,
    NamingClient,
)
from ..core import Directory, PasswordHasher
from ..errors import FairhubError
from ..notebooks import NotebookRegistry
from ..pidreg.client import EndpointConfig, EndpointRouter
from ..pidreg.mock_service import MockPidService
from ..pidreg.registry import ObjectKind, PidRegistry
from ..pkgstore import PackageStore
from ..pubreg.imports import BibliographicImporter, DataCiteClient, EuropePmcClient
from ..pubreg.registry import ArticleRegistry, AssetKind
from ..workflows import WorkflowEngine
from .auth import SessionStore

CONFIG_NAME = "config.json"
STATE_NAME = "state.json"

DEFAULT_BASE_URL = "http://127.0.0.1:8420"

DEFAULT_CONFIG = {
    "base_url": DEFAULT_BASE_URL,
    "pid_endpoints": [
        {
            "name": "embedded",
            "base_url": "https://pid.invalid",
            "prefix": "21.11998",
            "embedded": True,
        }
    ],
    "pid_assignments": {},
    "naming": {"embedded": True, "base_url": "https://naming.invalid"},
    "upstream": {
        "mode": "fixture",
        "fixture_dir": "fixtures",
        "europepmc_base": "https://www.ebi.ac.uk/europepmc",
        "datacite_base": "https://api.datacite.org",
    },
    "session_ttl_seconds": 8 * 3600,
    "max_zip_bytes": 2 * 1024 ** 3,
}

# object kind of a PID -> catalogue that can claim it
_KIND_TO_ASSET = {
    ObjectKind.ANTIBODY: AssetKind.ANTIBODY,
    ObjectKind.MOUSE_LINE: AssetKind.MOUSE_LINE,
    ObjectKind.CELL_LINE: AssetKind.CELL_LINE,
    ObjectKind.NOTEBOOK: AssetKind.NOTEBOOK,
}


@dataclass
class LandingPageView:
    """The minimal public face of a PID; never includes restricted fields."""

    pid: str
    object_kind: str
    title_or_designation: str
    owning_group_name: str
    created_at: str

    def to_dict(self) -> dict:
        return {
            "pid": self.pid,
            "object_kind": self.object_kind,
            "title_or_designation": self.title_or_designation,
            "owning_group_name": self.owning_group_name,
            "created_at": self.created_at,
        }


class Portal:
    def __init__(
        self,
        data_dir: str | Path,
        hasher: PasswordHasher | None = None,
        upstream_mode: str | None = None,
        fixture_dir: str | Path | None = None,
        base_url: str | None = None,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.config = self._load_config()
        if base_url:
            self.config["base_url"] = base_url
        self.base_url = os.environ.get("FAIRHUB_PID_BASE_URL") or self.config["base_url"]
        self.base_url = self.base_url.rstrip("/")

        self.directory = Directory(hasher)

        # PID plumbing: embedded endpoints share one in-process mock service
        self.pid_service = MockPidService()
        router = EndpointRouter()
        for entry in self.config["pid_endpoints"]:
            endpoint = EndpointConfig.from_dict(entry)
            if entry.get("embedded"):
                endpoint.wsgi_app = self.pid_service
            router.add(endpoint, default=entry.get("default", False))
        for kind, name in self.config["pid_assignments"].items():
            router.assign(kind, name)
        self.pid_registry = PidRegistry(
            router,
            journal_path=self.data_dir / "pids.jsonl",
            landing_url=self._landing_url,
        )

        self.store = PackageStore(self.data_dir / "store", directory=self.directory)

        naming_cfg = self.config["naming"]
        self.naming_service = MockNamingService() if naming_cfg.get("embedded") else None
        naming_client = NamingClient(
            naming_cfg["base_url"], wsgi_app=self.naming_service
        )

        self.articles = ArticleRegistry(self.directory, asset_resolver=self._asset_exists)
        self.antibodies = AntibodyCatalogue(
            self.directory, mint_pid=self._minter(ObjectKind.ANTIBODY)
        )
        self.mouse_lines = MouseLineCatalogue(
            self.directory, mint_pid=self._minter(ObjectKind.MOUSE_LINE)
        )
        self.cell_lines = CellLineCatalogue(
            self.directory,
            naming_client=naming_client,
            mint_pid=self._minter(ObjectKind.CELL_LINE),
        )
        self.notebooks = NotebookRegistry(
            self.directory, self.pid_registry, self.store
        )
        self.workflows = WorkflowEngine(
            self.directory,
            pid_registry=self.pid_registry,
            package_store=self.store,
            antibody_exists=self.antibodies.exists,
            mouse_exists=self.mouse_lines.mouse_exists,
            case_url=self._case_url,
            max_zip_bytes=int(self.config.get("max_zip_bytes", 2 * 1024 ** 3)),
        )

        upstream = self.config["upstream"]
        mode = (
            upstream_mode
            or os.environ.get("FAIRHUB_FIXTURE_MODE")
            or upstream["mode"]
        )
        fdir = Path(fixture_dir) if fixture_dir else self.data_dir / upstream["fixture_dir"]
        self.europepmc = EuropePmcClient(
            upstream["europepmc_base"], mode=mode, fixture_dir=fdir
        )
        self.datacite = DataCiteClient(
            upstream["datacite_base"], mode=mode, fixture_dir=fdir
        )
        self.importer = BibliographicImporter(self.articles, self.europepmc, self.datacite)

        self.sessions = SessionStore(int(self.config.get("session_ttl_seconds", 28800)))

        self._load_state()

    # -- configuration and persistence ---------------------------------

    def _load_config(self) -> dict:
        path = self.data_dir / CONFIG_NAME
        if path.exists():
            config = json.loads(path.read_text("utf-8"))
        else:
            config = json.loads(json.dumps(DEFAULT_CONFIG))
            path.write_text(json.dumps(config, indent=2) + "\n", "utf-8")
        merged = json.loads(json.dumps(DEFAULT_CONFIG))
        merged.update(config)
        return merged

    def save_config(self) -> None:
        path = self.data_dir / CONFIG_NAME
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.config, indent=2) + "\n", "utf-8")
        os.replace(tmp, path)

    def _load_state(self) -> None:
        path = self.data_dir / STATE_NAME
        if not path.exists():
            return
        state = json.loads(path.read_text("utf-8"))
        self.directory.import_state(state.get("directory", {}))
        self.articles.import_state(state.get("articles", {}))
        self.antibodies.import_state(state.get("antibodies", {}))
        self.mouse_lines.import_state(state.get("mouse_lines", {}))
        self.cell_lines.import_state(state.get("cell_lines", {}))
        self.notebooks.import_state(state.get("notebooks", {}))
        self.workflows.import_state(state.get("workflows", {}))
        if self.naming_service is not None and "naming_service" in state:
            self.naming_service.import_state(state["naming_service"])

    def save(self) -> None:
        state = {
            "directory": self.directory.export_state(),
            "articles": self.articles.export_state(),
            "antibodies": self.antibodies.export_state(),
            "mouse_lines": self.mouse_lines.export_state(),
            "cell_lines": self.cell_lines.export_state(),
            "notebooks": self.notebooks.export_state(),
            "workflows": self.workflows.export_state(),
        }
        if self.naming_service is not None:
            state["naming_service"] = self.naming_service.export_state()
        path = self.data_dir / STATE_NAME
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(state, indent=2) + "\n", "utf-8")
        os.replace(tmp, path)

    def close(self) -> None:
        self.save()
        self.pid_registry.close()
        self.store.close()

    # -- URL builders ---------------------------------------------------

    def _landing_url(self, prefix: str, suffix: str) -> str:
        return f"{self.base_url}/landing/{prefix}/{suffix}"

    def _case_url(self, case_id: str) -> str:
        return f"{self.base_url}/cases/{case_id}"

    def _minter(self, kind: ObjectKind):
        def mint() -> str:
            return self.pid_registry.mint_for_kind(kind, self.pid_registry.landing_url).pid

        return mint

    # -- cross-module resolution ----------------------------------------

    def _asset_exists(self, kind: AssetKind, asset_id: str) -> bool:
        if kind is AssetKind.ANTIBODY:
            return self.antibodies.exists(asset_id)
        if kind is AssetKind.MOUSE_LINE:
            return self.mouse_lines.exists(asset_id)
        if kind is AssetKind.CELL_LINE:
            return self.cell_lines.exists(asset_id)
        if kind is AssetKind.NOTEBOOK:
            return self.notebooks.exists(asset_id)
        if kind in (AssetKind.MICROSCOPY_CASE, AssetKind.ECHO_CASE):
            return self.workflows.exists(asset_id)
        if kind is AssetKind.DATA_PACKAGE:
            try:
                self.store.get_package(asset_id)
                return True
            except FairhubError:
                return False
        return False

    def describe_asset(self, kind: AssetKind, asset_id: str) -> dict:
        """Name + PID for nesting linked assets into article JSON-LD."""
        try:
            if kind is AssetKind.ANTIBODY:
                record = self.antibodies.get_antibody(asset_id)
                return {"name": record.designation, "pid": record.pid}
            if kind is AssetKind.MOUSE_LINE:
                line = self.mouse_lines.get_line(asset_id)
                return {"name": line.generated_name, "pid": line.pid}
            if kind is AssetKind.CELL_LINE:
                cell = self.cell_lines.get_cell_line(asset_id)
                return {"name": cell.standardized_name or cell.cell_id, "pid": cell.pid}
            if kind is AssetKind.NOTEBOOK:
                nb = self.notebooks.get_notebook(asset_id)
                return {"name": nb.title, "pid": nb.pid}
            if kind in (AssetKind.MICROSCOPY_CASE, AssetKind.ECHO_CASE):
                case = self.workflows.get_case(asset_id)
                return {"name": f"{case.kind.value} case {case.case_id}", "pid": case.pid}
            if kind is AssetKind.DATA_PACKAGE:
                pkg = self.store.get_package(asset_id)
                return {
                    "name": f"Data package {asset_id}",
                    "pid": pkg.package_metadata.get("dataset_pid"),
                }
        except FairhubError:
            pass
        return {"name": asset_id, "pid": None}

    # -- landing pages ---------------------------------------------------

    def landing_view(self, prefix: str, suffix: str) -> LandingPageView:
        record = self.pid_registry.resolve_pid(prefix, suffix)
        pid = record.pid
        kind = record.object_kind
        title = pid
        group_id = None

        if kind is ObjectKind.ANTIBODY:
            obj = self.antibodies.find_by_pid(pid)
            if obj is not None:
                title = obj.designation
                group_id = obj.acl.owning_group_id
        elif kind is ObjectKind.MOUSE_LINE:
            obj = self.mouse_lines.find_by_pid(pid)
            if obj is not None:
                title = obj.generated_name
                group_id = obj.acl.owning_group_id
        elif kind is ObjectKind.CELL_LINE:
            obj = self.cell_lines.find_by_pid(pid)
            if obj is not None:
                title = obj.standardized_name or obj.cell_id
                group_id = obj.acl.owning_group_id
        elif kind is ObjectKind.NOTEBOOK:
            obj = self.notebooks.find_by_pid(pid)
            if obj is not None:
                title = obj.title
                group_id = obj.acl.owning_group_id
            else:
                # minted for a barcode batch, not yet claimed by a notebook
                title = "Reserved notebook identifier"
        elif kind is ObjectKind.DATASET:
            title = "Research dataset"
            for pkg in self.store.packages():
                if pkg.package_metadata.get("dataset_pid") == pid:
                    title = f"Research dataset ({len(pkg.files)} files)"
                    group_id = pkg.acl.owning_group_id
                    break
        elif kind is ObjectKind.LABEL_SET:
            title = "Sample label"
            for case in self.workflows.all_cases():
                if any(l.pid == pid for l in case.labels):
                    title = f"Sample label of {case.kind.value} case"
                    group_id = case.group_id
                    break

        group_name = ""
        if group_id:
            try:
                group_name = self.directory.get_group(group_id).name
            except FairhubError:
                group_name = ""
        return LandingPageView(
            pid=pid,
            object_kind=kind.value,
            title_or_designation=title,
            owning_group_name=group_name,
            created_at=record.created_at.isoformat(),
        )

    # -- TAN batches -----------------------------------------------------

    def mint_tan_batch(self, count: int):
        endpoint = self.pid_registry.router.resolve(ObjectKind.NOTEBOOK.value)
        return self.pid_registry.mint_tan_batch(
            endpoint.prefix, count, ObjectKind.NOTEBOOK
        )
