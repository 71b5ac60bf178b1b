"""HTTP application: every module operation exposed under /api/v1.

Request bodies are parsed by hand from JSON so every rejection flows
through the shared error envelope; file payloads (scans, zip archives,
CSV imports) arrive as raw request bodies, not multipart forms.
"""

from __future__ import annotations

import base64
from contextlib import asynccontextmanager
from datetime import date

from fastapi import FastAPI, Request, Response
from fastapi.responses import HTMLResponse, JSONResponse

from ..catalogues import (
    export_antibodies_csv,
    export_cell_lines_csv,
    import_antibodies_csv,
    import_cell_lines_csv,
)
from ..catalogues.mouse_lines import MutationSpec, generate_mouse_line_name
from ..core import AccessScope
from ..errors import AccessDenied, FairhubError, ValidationError
from ..notebooks import tan_manifest_csv
from ..pidreg.registry import UnknownPid
from ..pkgstore import DeleteFile, PutFile, SetFileMetadata, SetPackageMetadata
from ..pubreg import exports
from ..pubreg.registry import AssetKind, Author
from ..workflows import ingest_dataset_zip, labels_csv
from .auth import AuthRequired, login
from .jsonld import (
    article_html,
    article_jsonld,
    canonical_bytes,
    landing_html,
    not_found_html,
)
from .portal import Portal

_MUTATING = {"POST", "PUT", "PATCH", "DELETE"}


def _wants_jsonld(accept_header: str) -> bool:
    """Exact media types application/json or application/ld+json opt in."""
    for part in (accept_header or "").split(","):
        media = part.split(";")[0].strip().lower()
        if media in ("application/json", "application/ld+json"):
            return True
    return False


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise ValidationError(f"request body is not valid JSON: {exc}")
    if not isinstance(body, dict):
        raise ValidationError("request body must be a JSON object")
    return body


def _acl_arg(body: dict) -> AccessScope | None:
    raw = body.get("acl")
    if raw is None:
        return None
    try:
        return AccessScope.from_dict(raw).validate()
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"bad acl: {exc}", fields=["acl"])


def _date_arg(body: dict, key: str) -> date | None:
    raw = body.get(key)
    if raw in (None, ""):
        return None
    try:
        return date.fromisoformat(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"{key} must be an ISO date", fields=[key])


def _authors_arg(raw) -> list[Author]:
    authors = []
    for entry in raw or []:
        if not isinstance(entry, dict):
            raise ValidationError("authors must be objects", fields=["authors"])
        authors.append(
            Author(
                family=entry.get("family", ""),
                given=entry.get("given", ""),
                orcid=entry.get("orcid"),
            )
        )
    return authors


def create_app(portal: Portal, save_on_mutation: bool = True) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        portal.close()

    app = FastAPI(title="fairhub", lifespan=lifespan, docs_url=None, redoc_url=None)
    app.state.portal = portal

    # -- error envelope -------------------------------------------------

    @app.exception_handler(FairhubError)
    async def _domain_error(_request: Request, exc: FairhubError):
        payload = {"error": exc.to_dict()}
        cell_id = getattr(exc, "cell_id", None)
        if cell_id:
            payload["error"]["cell_id"] = cell_id
        rows = getattr(exc, "rows", None)
        if rows:
            payload["error"]["rows"] = [
                {"line": line, "reason": reason} for line, reason in rows
            ]
        return JSONResponse(status_code=exc.http_status, content=payload)

    @app.exception_handler(Exception)
    async def _unexpected_error(_request: Request, _exc: Exception):
        # never leak stack traces through the API surface
        return JSONResponse(
            status_code=500,
            content={"error": {"code": "internal_error", "message": "internal error"}},
        )

    if save_on_mutation:

        @app.middleware("http")
        async def _persist_after_mutation(request: Request, call_next):
            response = await call_next(request)
            if request.method in _MUTATING and response.status_code < 400:
                portal.save()
            return response

    # -- session helpers ------------------------------------------------

    def session_user(request: Request) -> str | None:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            return portal.sessions.resolve(header[7:].strip())
        return None

    def require_user(request: Request) -> str:
        user_id = session_user(request)
        if user_id is None:
            raise AuthRequired("a valid session token is required")
        return user_id

    def require_staff(request: Request) -> str:
        user_id = require_user(request)
        if not portal.directory.is_facility_staff(user_id):
            raise AccessDenied("facility staff role required")
        return user_id

    # -- meta -----------------------------------------------------------

    @app.get("/api/v1/health")
    async def health():
        return {"status": "ok"}

    @app.post("/api/v1/auth/login")
    async def auth_login(request: Request):
        body = await _json_body(request)
        token = login(
            portal.directory,
            portal.sessions,
            body.get("username_or_orcid", ""),
            body.get("password", ""),
        )
        user = portal.directory.get_user(token.user_id)
        return {
            "token": token.token,
            "user_id": token.user_id,
            "expires_at": token.expires_at.isoformat(),
            "family_name": user.family_name,
            "given_name": user.given_name,
            "orcid": user.orcid,
            "is_facility_staff": portal.directory.is_facility_staff(token.user_id),
        }

    @app.post("/api/v1/auth/logout")
    async def auth_logout(request: Request):
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            portal.sessions.revoke(header[7:].strip())
        return {"status": "logged_out"}

    @app.get("/api/v1/me")
    async def me(request: Request):
        user_id = require_user(request)
        user = portal.directory.get_user(user_id)
        memberships = portal.directory.memberships_of(user_id)
        return {
            "user_id": user.user_id,
            "family_name": user.family_name,
            "given_name": user.given_name,
            "orcid": user.orcid,
            "is_facility_staff": portal.directory.is_facility_staff(user_id),
            "memberships": [
                {"group_id": gid, "role": role.value}
                for gid, role in memberships.items()
            ],
        }

    @app.get("/api/v1/groups")
    async def list_groups(request: Request):
        require_user(request)
        return [
            {"group_id": g.group_id, "name": g.name, "description": g.description}
            for g in portal.directory.groups()
        ]

    # -- publications ---------------------------------------------------

    @app.get("/api/v1/articles")
    async def search_articles(request: Request):
        params = request.query_params
        open_access = params.get("open_access")
        results = portal.articles.search_articles(
            session_user(request),
            text=params.get("text"),
            year_from=int(params["year_from"]) if params.get("year_from") else None,
            year_to=int(params["year_to"]) if params.get("year_to") else None,
            group=params.get("group"),
            publication_type=params.get("publication_type"),
            open_access=None if open_access is None else open_access == "true",
        )
        return [a.to_dict() for a in results]

    @app.post("/api/v1/articles")
    async def create_article(request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        article = portal.articles.create_article(
            title=body.get("title", ""),
            authors=_authors_arg(body.get("authors")),
            year=body.get("year", 0),
            journal=body.get("journal", ""),
            publication_type=body.get("publication_type", "Journal Article"),
            open_access=bool(body.get("open_access", False)),
            doi=body.get("doi"),
            pmid=body.get("pmid"),
            volume=body.get("volume"),
            start_page=body.get("start_page"),
            acl=_acl_arg(body),
            groups=set(body.get("groups", [])),
            subprojects=set(body.get("subprojects", [])),
            external_resources=body.get("external_resources"),
        )
        return JSONResponse(status_code=201, content=article.to_dict())

    @app.get("/api/v1/articles/{article_id}")
    async def article_representation(article_id: str, request: Request):
        requester = session_user(request)
        article = portal.articles.get_article(article_id)
        if not portal.directory.can_access(requester, article.acl):
            raise AccessDenied("article is not visible to this requester")
        links = portal.articles.links_for_article(article_id)
        payload = canonical_bytes(
            article_jsonld(article, links, portal.describe_asset)
        )
        if _wants_jsonld(request.headers.get("accept", "")):
            return Response(content=payload, media_type="application/ld+json")
        return HTMLResponse(article_html(article, payload))

    @app.get("/api/v1/articles/{article_id}/record")
    async def article_record(article_id: str, request: Request):
        requester = session_user(request)
        article = portal.articles.get_article(article_id)
        if not portal.directory.can_access(requester, article.acl):
            raise AccessDenied("article is not visible to this requester")
        record = article.to_dict()
        record["links"] = [
            l.to_dict() for l in portal.articles.links_for_article(article_id)
        ]
        return record

    @app.patch("/api/v1/articles/{article_id}")
    async def update_article(article_id: str, request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        if "authors" in body:
            body["authors"] = _authors_arg(body["authors"])
        if "acl" in body:
            body["acl"] = _acl_arg(body)
        if "groups" in body:
            body["groups"] = set(body["groups"])
        if "subprojects" in body:
            body["subprojects"] = set(body["subprojects"])
        article = portal.articles.update_article(article_id, user_id, **body)
        return article.to_dict()

    @app.post("/api/v1/articles/{article_id}/links")
    async def link_asset(article_id: str, request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        try:
            kind = AssetKind(body.get("asset_kind", ""))
        except ValueError:
            raise ValidationError(
                f"unknown asset kind {body.get('asset_kind')!r}", fields=["asset_kind"]
            )
        link = portal.articles.link_asset(
            user_id, article_id, kind, body.get("asset_id", "")
        )
        return JSONResponse(status_code=201, content=link.to_dict())

    @app.delete("/api/v1/articles/{article_id}/links/{asset_kind}/{asset_id}")
    async def unlink_asset(
        article_id: str, asset_kind: str, asset_id: str, request: Request
    ):
        user_id = require_user(request)
        try:
            kind = AssetKind(asset_kind)
        except ValueError:
            raise ValidationError(f"unknown asset kind {asset_kind!r}")
        portal.articles.unlink_asset(user_id, article_id, kind, asset_id)
        return {"status": "unlinked"}

    @app.get("/api/v1/articles/{article_id}/links")
    async def article_links(article_id: str, request: Request):
        requester = session_user(request)
        article = portal.articles.get_article(article_id)
        if not portal.directory.can_access(requester, article.acl):
            raise AccessDenied("article is not visible to this requester")
        return [l.to_dict() for l in portal.articles.links_for_article(article_id)]

    @app.post("/api/v1/imports/publication")
    async def import_publication(request: Request):
        require_user(request)
        body = await _json_body(request)
        if body.get("pmid"):
            article = portal.importer.import_by_pmid(str(body["pmid"]))
        elif body.get("doi"):
            article = portal.importer.import_by_doi(str(body["doi"]))
        else:
            raise ValidationError("provide pmid or doi", fields=["pmid", "doi"])
        return article.to_dict()

    @app.get("/api/v1/publications/export")
    async def export_publications(request: Request):
        fmt = request.query_params.get("format", "json")
        articles = portal.articles.search_articles(session_user(request))
        if fmt == "ris":
            return Response(
                content=exports.to_ris(articles),
                media_type="application/x-research-info-systems",
            )
        if fmt == "csv":
            return Response(content=exports.to_csv(articles), media_type="text/csv")
        if fmt == "json":
            return Response(
                content=exports.to_json(articles), media_type="application/json"
            )
        raise ValidationError(f"unknown export format {fmt!r}", fields=["format"])

    @app.get("/api/v1/stats/publications")
    async def publication_stats(request: Request):
        return portal.articles.compute_stats(session_user(request))

    # -- antibodies -----------------------------------------------------

    @app.get("/api/v1/antibodies")
    async def list_antibodies(request: Request):
        text = (request.query_params.get("text") or "").lower()
        records = portal.antibodies.list_visible(session_user(request))
        if text:
            records = [
                r
                for r in records
                if text in f"{r.designation} {r.target} {r.manufacturer_name}".lower()
            ]
        return [r.to_dict() for r in records]

    @app.post("/api/v1/antibodies")
    async def create_antibody(request: Request):
        require_user(request)
        body = await _json_body(request)
        record = portal.antibodies.register_antibody(
            kind=body.get("kind", ""),
            designation=body.get("designation", ""),
            target=body.get("target", ""),
            host_species=body.get("host_species", ""),
            clonality=body.get("clonality", ""),
            manufacturer_name=body.get("manufacturer_name", ""),
            catalog_number=body.get("catalog_number", ""),
            antibody_registry_id=body.get("antibody_registry_id"),
            antibodypedia_url=body.get("antibodypedia_url"),
            reactivity_species=body.get("reactivity_species", ""),
            acl=_acl_arg(body),
        )
        return JSONResponse(status_code=201, content=record.to_dict())

    # fixed paths must precede the {antibody_id} routes; the router is
    # first-match and would otherwise treat "export.csv" as an id
    @app.get("/api/v1/antibodies/export.csv")
    async def antibodies_csv(request: Request):
        data = export_antibodies_csv(portal.antibodies, session_user(request))
        return Response(content=data, media_type="text/csv")

    @app.post("/api/v1/antibodies/import.csv")
    async def antibodies_import_csv(request: Request):
        require_user(request)
        data = await request.body()
        records = import_antibodies_csv(portal.antibodies, data)
        return {"imported": len(records)}

    @app.get("/api/v1/antibodies/{antibody_id}")
    async def get_antibody(antibody_id: str, request: Request):
        record = portal.antibodies.get_antibody(antibody_id)
        if not portal.directory.can_access(session_user(request), record.acl):
            raise AccessDenied("antibody is not visible to this requester")
        return record.to_dict()

    @app.patch("/api/v1/antibodies/{antibody_id}")
    async def update_antibody(antibody_id: str, request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        if "acl" in body:
            body["acl"] = _acl_arg(body)
        record = portal.antibodies.update_antibody(antibody_id, user_id, **body)
        return record.to_dict()

    @app.post("/api/v1/antibodies/{antibody_id}/assessments")
    async def record_assessment(antibody_id: str, request: Request):
        require_user(request)
        body = await _json_body(request)
        assessment = portal.antibodies.record_assessment(
            antibody_id,
            application=body.get("application", ""),
            rating=body.get("rating"),
            comment=body.get("comment", ""),
            image_package=body.get("image_package"),
        )
        return JSONResponse(status_code=201, content=assessment.to_dict())

    @app.get("/api/v1/antibodies/{antibody_id}/assessments")
    async def list_assessments(antibody_id: str, request: Request):
        record = portal.antibodies.get_antibody(antibody_id)
        if not portal.directory.can_access(session_user(request), record.acl):
            raise AccessDenied("antibody is not visible to this requester")
        entries = portal.antibodies.assessments_for(antibody_id)
        averages = {
            app_name: portal.antibodies.average_rating(antibody_id, app_name)
            for app_name in sorted({e.application for e in entries})
        }
        return {
            "assessments": [e.to_dict() for e in entries],
            "average_by_application": averages,
        }

    # -- mouse lines ----------------------------------------------------

    @app.get("/api/v1/mouse-lines")
    async def list_mouse_lines(request: Request):
        return [l.to_dict() for l in portal.mouse_lines.list_visible(session_user(request))]

    @app.post("/api/v1/mouse-lines")
    async def create_mouse_line(request: Request):
        require_user(request)
        body = await _json_body(request)
        line = portal.mouse_lines.register_mouse_line(
            background_strain=body.get("background_strain", ""),
            breeding_type=body.get("breeding_type", "Inbred"),
            originating_lab=body.get("originating_lab", ""),
            mutations=body.get("mutations"),
            mpd_id=body.get("mpd_id"),
            provenance=body.get("provenance", ""),
            acl=_acl_arg(body),
        )
        return JSONResponse(status_code=201, content=line.to_dict())

    @app.post("/api/v1/mouse-lines/preview-name")
    async def preview_mouse_line_name(request: Request):
        require_user(request)
        body = await _json_body(request)
        try:
            mutations = [
                m if isinstance(m, MutationSpec) else MutationSpec.from_dict(m)
                for m in body.get("mutations", [])
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad mutation spec: {exc}", fields=["mutations"])
        name = generate_mouse_line_name(body.get("background_strain", ""), mutations)
        return {"name": name}

    @app.get("/api/v1/mouse-lines/{line_id}")
    async def get_mouse_line(line_id: str, request: Request):
        line = portal.mouse_lines.get_line(line_id)
        if not portal.directory.can_access(session_user(request), line.acl):
            raise AccessDenied("mouse line is not visible to this requester")
        return line.to_dict()

    @app.patch("/api/v1/mouse-lines/{line_id}")
    async def update_mouse_line(line_id: str, request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        if "acl" in body:
            body["acl"] = _acl_arg(body)
        line = portal.mouse_lines.update_line(line_id, user_id, **body)
        return line.to_dict()

    @app.post("/api/v1/mouse-lines/{line_id}/mice")
    async def add_mouse(line_id: str, request: Request):
        require_user(request)
        body = await _json_body(request)
        birth = _date_arg(body, "birth_date")
        if birth is None:
            raise ValidationError("birth_date is required", fields=["birth_date"])
        mouse = portal.mouse_lines.add_mouse(
            line_id, body.get("name", ""), body.get("sex", ""), birth
        )
        return JSONResponse(status_code=201, content=mouse.to_dict())

    @app.get("/api/v1/mouse-lines/{line_id}/mice")
    async def list_mice(line_id: str, request: Request):
        line = portal.mouse_lines.get_line(line_id)
        if not portal.directory.can_access(session_user(request), line.acl):
            raise AccessDenied("mouse line is not visible to this requester")
        return [m.to_dict() for m in portal.mouse_lines.mice_of_line(line_id)]

    # -- cell lines -----------------------------------------------------

    @app.get("/api/v1/cell-lines")
    async def list_cell_lines(request: Request):
        return [c.to_dict() for c in portal.cell_lines.list_visible(session_user(request))]

    @app.post("/api/v1/cell-lines")
    async def create_cell_line(request: Request):
        require_user(request)
        body = await _json_body(request)
        kwargs = dict(body)
        kwargs["acl"] = _acl_arg(body)
        record = portal.cell_lines.register_cell_line(**kwargs)
        return JSONResponse(status_code=201, content=record.to_dict())

    @app.get("/api/v1/cell-lines/export.csv")
    async def cell_lines_csv(request: Request):
        data = export_cell_lines_csv(portal.cell_lines, session_user(request))
        return Response(content=data, media_type="text/csv")

    @app.post("/api/v1/cell-lines/import.csv")
    async def cell_lines_import_csv(request: Request):
        require_user(request)
        data = await request.body()
        records = import_cell_lines_csv(portal.cell_lines, data)
        return {"imported": len(records)}

    @app.get("/api/v1/cell-lines/{cell_id}")
    async def get_cell_line(cell_id: str, request: Request):
        record = portal.cell_lines.get_cell_line(cell_id)
        if not portal.directory.can_access(session_user(request), record.acl):
            raise AccessDenied("cell line is not visible to this requester")
        return record.to_dict()

    @app.patch("/api/v1/cell-lines/{cell_id}")
    async def update_cell_line(cell_id: str, request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        if "acl" in body:
            body["acl"] = _acl_arg(body)
        record = portal.cell_lines.update_cell_line(cell_id, user_id, **body)
        return record.to_dict()

    @app.post("/api/v1/cell-lines/{cell_id}/request-name")
    async def request_cell_line_name(cell_id: str, request: Request):
        require_user(request)
        body = await _json_body(request)
        record = portal.cell_lines.request_standard_name(
            cell_id, institution_code=body.get("institution_code")
        )
        return record.to_dict()

    # -- notebooks ------------------------------------------------------

    @app.get("/api/v1/notebooks")
    async def list_notebooks(request: Request):
        params = request.query_params
        records = portal.notebooks.list_notebooks(
            session_user(request),
            group=params.get("group"),
            owner=params.get("owner"),
            text=params.get("text"),
        )
        return [r.to_dict() for r in records]

    @app.post("/api/v1/notebooks")
    async def register_notebook(request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        pid = body.get("pid", "")
        if "/" in pid:
            prefix, suffix = pid.split("/", 1)
        else:
            prefix, suffix = body.get("prefix", ""), body.get("suffix", "")
        record = portal.notebooks.register_notebook(
            prefix=prefix,
            suffix=suffix,
            tan=body.get("tan", ""),
            owner_user_id=user_id,
            group_id=body.get("group_id", ""),
            title=body.get("title", ""),
            storage_location=body.get("storage_location", ""),
            date_from=_date_arg(body, "date_from"),
            date_to=_date_arg(body, "date_to"),
            acl=_acl_arg(body),
        )
        return JSONResponse(status_code=201, content=record.to_dict())

    @app.get("/api/v1/notebooks/{notebook_id}")
    async def get_notebook(notebook_id: str, request: Request):
        record = portal.notebooks.get_notebook(notebook_id)
        if not portal.directory.can_access(session_user(request), record.acl):
            raise AccessDenied("notebook is not visible to this requester")
        return record.to_dict()

    @app.post("/api/v1/notebooks/{notebook_id}/scans")
    async def upload_scan(notebook_id: str, request: Request):
        user_id = require_user(request)
        filename = request.query_params.get("filename", "")
        data = await request.body()
        stored = portal.notebooks.upload_scan(notebook_id, filename, data, user_id)
        return JSONResponse(status_code=201, content=stored.to_dict())

    @app.get("/api/v1/notebooks/{notebook_id}/scans")
    async def list_scans(notebook_id: str, request: Request):
        requester = session_user(request)
        record = portal.notebooks.get_notebook(notebook_id)
        if not portal.directory.can_access(requester, record.acl):
            raise AccessDenied("notebook is not visible to this requester")
        if record.scan_package is None:
            return []
        pkg = portal.store.get_package(record.scan_package)
        return [f.to_dict() for f in pkg.files.values()]

    @app.get("/api/v1/notebooks/{notebook_id}/scans/{name:path}")
    async def get_scan(notebook_id: str, name: str, request: Request):
        requester = session_user(request)
        record = portal.notebooks.get_notebook(notebook_id)
        if record.scan_package is None:
            raise ValidationError("notebook has no scans")
        data, stored = portal.store.get_file(
            record.scan_package, name, requester=requester
        )
        return Response(content=data, media_type=stored.media_type_hint)

    @app.post("/api/v1/tan-batches")
    async def mint_tan_batch(request: Request):
        require_staff(request)
        body = await _json_body(request)
        count = body.get("count")
        if not isinstance(count, int):
            raise ValidationError("count must be an integer", fields=["count"])
        pairs = portal.mint_tan_batch(count)
        return Response(content=tan_manifest_csv(pairs), media_type="text/csv")

    # -- workflow cases -------------------------------------------------

    @app.get("/api/v1/cases")
    async def list_cases(request: Request):
        params = request.query_params
        cases = portal.workflows.list_cases(
            session_user(request),
            kind=params.get("kind"),
            state=params.get("state"),
        )
        return [c.to_dict() for c in cases]

    @app.post("/api/v1/cases")
    async def create_case(request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        case = portal.workflows.create_case(
            kind=body.get("kind", ""),
            requester=user_id,
            payload=body.get("payload", {}),
            group_id=body.get("group_id", ""),
            acl=_acl_arg(body),
        )
        return JSONResponse(status_code=201, content=_case_view(case, user_id))

    def _case_view(case, requester):
        # available_actions is per-requester, so it lives on the response,
        # not on the stored record
        return dict(
            case.to_dict(),
            available_actions=portal.workflows.available_actions(
                case.case_id, requester
            ),
        )

    @app.get("/api/v1/cases/{case_id}")
    async def get_case(case_id: str, request: Request):
        requester = session_user(request)
        case = portal.workflows.get_case(case_id)
        if not portal.workflows.can_view_case(requester, case):
            raise AccessDenied("case is not visible to this requester")
        return _case_view(case, requester)

    @app.post("/api/v1/cases/{case_id}/actions")
    async def case_action(case_id: str, request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        case = portal.workflows.transition_case(
            case_id, user_id, body.get("action", ""), note=body.get("note", "")
        )
        return _case_view(case, user_id)

    @app.post("/api/v1/cases/{case_id}/consultation")
    async def case_consultation(case_id: str, request: Request):
        user_id = require_staff(request)
        body = await _json_body(request)
        labels = portal.workflows.record_consultation(
            case_id,
            user_id,
            stainings=body.get("stainings", []),
            samples=body.get("samples", []),
        )
        return {"labels": [l.to_dict() for l in labels]}

    @app.get("/api/v1/cases/{case_id}/labels.csv")
    async def case_labels(case_id: str, request: Request):
        case = portal.workflows.get_case(case_id)
        if not portal.workflows.can_view_case(session_user(request), case):
            raise AccessDenied("case is not visible to this requester")
        return Response(content=labels_csv(case), media_type="text/csv")

    @app.post("/api/v1/cases/{case_id}/dataset")
    async def case_dataset(case_id: str, request: Request):
        user_id = require_user(request)
        data = await request.body()
        package_id, images = ingest_dataset_zip(
            portal.workflows, case_id, data, actor=user_id
        )
        return JSONResponse(
            status_code=201,
            content={
                "package_id": package_id,
                "images": [m.to_dict() for m in images],
            },
        )

    @app.post("/api/v1/cases/{case_id}/evaluator")
    async def case_evaluator(case_id: str, request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        case = portal.workflows.assign_evaluator(
            case_id, body.get("user_id", ""), user_id
        )
        return _case_view(case, user_id)

    # -- packages -------------------------------------------------------

    @app.get("/api/v1/packages")
    async def list_packages(request: Request):
        requester = session_user(request)
        return [
            p.to_dict()
            for p in portal.store.packages()
            if portal.store.can_read(p.package_id, requester)
        ]

    @app.post("/api/v1/packages")
    async def create_package(request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        acl = _acl_arg(body)
        if acl is None:
            raise ValidationError("acl is required", fields=["acl"])
        if not portal.directory.can_write(user_id, acl):
            raise AccessDenied("acl does not grant the creator write access")
        pkg = portal.store.create_package(acl, package_metadata=body.get("metadata"))
        return JSONResponse(status_code=201, content=pkg.to_dict())

    @app.get("/api/v1/packages/{package_id}")
    async def get_package(package_id: str, request: Request):
        requester = session_user(request)
        pkg = portal.store.get_package(package_id)
        if not portal.store.can_read(package_id, requester):
            raise AccessDenied("package is not visible to this requester")
        return pkg.to_dict()

    @app.post("/api/v1/packages/{package_id}/transactions")
    async def run_transaction(package_id: str, request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        mutations = []
        for raw in body.get("mutations", []):
            op = raw.get("op")
            if op == "put":
                try:
                    data = base64.b64decode(raw.get("data_b64", ""), validate=True)
                except Exception:
                    raise ValidationError("put.data_b64 is not valid base64")
                mutations.append(
                    PutFile(raw.get("name", ""), data, raw.get("metadata", {}))
                )
            elif op == "delete":
                mutations.append(DeleteFile(raw.get("name", "")))
            elif op == "set_package_metadata":
                mutations.append(SetPackageMetadata(raw.get("metadata", {})))
            elif op == "set_file_metadata":
                mutations.append(
                    SetFileMetadata(raw.get("name", ""), raw.get("metadata", {}))
                )
            else:
                raise ValidationError(f"unknown mutation op {op!r}")
        pkg = portal.store.run_transaction(
            package_id,
            mutations,
            actor=user_id,
            expected_revision=body.get("expected_revision"),
        )
        return pkg.to_dict()

    @app.get("/api/v1/packages/{package_id}/files/{name:path}")
    async def get_package_file(package_id: str, name: str, request: Request):
        data, stored = portal.store.get_file(
            package_id, name, requester=session_user(request)
        )
        return Response(content=data, media_type=stored.media_type_hint)

    @app.post("/api/v1/packages/{package_id}/grants")
    async def grant_read(package_id: str, request: Request):
        user_id = require_user(request)
        body = await _json_body(request)
        portal.store.grant_read(package_id, body.get("user_id", ""), actor=user_id)
        return {"status": "granted"}

    @app.post("/api/v1/admin/tier-migration")
    async def tier_migration(request: Request):
        require_staff(request)
        body = await _json_body(request)
        report = portal.store.migrate_tiers(
            hot_capacity_bytes=body.get("hot_capacity_bytes", 0),
            min_candidate_size_bytes=body.get("min_candidate_size_bytes", 0),
        )
        return report.to_dict()

    # -- public pages ---------------------------------------------------

    @app.get("/landing/{prefix}/{suffix}")
    async def landing_page(prefix: str, suffix: str):
        try:
            view = portal.landing_view(prefix, suffix)
        except UnknownPid:
            return HTMLResponse(not_found_html(f"{prefix}/{suffix}"), status_code=404)
        return HTMLResponse(landing_html(view.to_dict()))

    @app.get("/api/v1/landing/{prefix}/{suffix}")
    async def landing_view_json(prefix: str, suffix: str):
        return portal.landing_view(prefix, suffix).to_dict()

    @app.get("/cases/{case_id}")
    async def case_page(case_id: str):
        try:
            case = portal.workflows.get_case(case_id)
        except FairhubError:
            return HTMLResponse(not_found_html(case_id), status_code=404)
        view = {
            "pid": case.pid or case.case_id,
            "object_kind": f"{case.kind.value} case",
            "title_or_designation": f"{case.kind.value} service case",
            "owning_group_name": "",
            "created_at": case.audit_trail[0].timestamp.isoformat()
            if case.audit_trail
            else "",
        }
        return HTMLResponse(landing_html(view))

    return app
