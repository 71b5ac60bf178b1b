"""Bibliographic import clients and field mapping.

Two upstream services are queried by identifier: a literature search API
for PubMed IDs and a DOI metadata API (JSON:API body) for DOIs.  Each
client runs in one of three modes:

``live``
    real HTTP against the configured base URL.
``record``
    live fetch, then the raw response body is written into the fixture
    directory for later replay.
``fixture``
    no network; responses come from the committed fixture files.  The
    fixture corpus is the whole universe in this mode, so an identifier
    without a fixture behaves like an empty search result.
"""

from __future__ import annotations

import json
from pathlib import Path

import httpx

from ..errors import FairhubError, ValidationError
from ..core import validate_orcid
from .registry import DOI_RE


class NotFound(FairhubError):
    code = "upstream_not_found"
    http_status = 404


class FixtureMissing(NotFound):
    code = "fixture_missing"


class UpstreamUnavailable(FairhubError):
    code = "upstream_unavailable"
    http_status = 502


class MappingError(FairhubError):
    code = "mapping_error"
    http_status = 502


class _FixtureClient:
    """Shared mode plumbing; subclasses supply URLs and fixture names."""

    def __init__(
        self,
        base_url: str,
        mode: str = "fixture",
        fixture_dir: str | Path | None = None,
        http: httpx.Client | None = None,
    ):
        if mode not in ("live", "record", "fixture"):
            raise ValidationError(f"unknown client mode {mode!r}", fields=["mode"])
        if mode in ("record", "fixture") and fixture_dir is None:
            raise ValidationError(f"{mode} mode needs a fixture directory", fields=["fixture_dir"])
        self.base_url = base_url.rstrip("/")
        self.mode = mode
        self.fixture_dir = Path(fixture_dir) if fixture_dir else None
        self._http = http

    def _client(self) -> httpx.Client:
        if self._http is None:
            self._http = httpx.Client(timeout=20.0)
        return self._http

    def _get(self, url: str) -> str:
        try:
            response = self._client().get(url)
        except httpx.HTTPError as exc:
            raise UpstreamUnavailable(f"GET {url} failed: {exc}") from exc
        if response.status_code == 404:
            raise NotFound(f"{url} returned 404")
        if response.status_code != 200:
            raise UpstreamUnavailable(f"{url} returned {response.status_code}")
        return response.text

    def _fetch_text(self, url: str, fixture_name: str) -> str:
        if self.mode == "fixture":
            path = self.fixture_dir / fixture_name
            if not path.exists():
                raise FixtureMissing(f"no fixture {fixture_name}")
            return path.read_text(encoding="utf-8")
        text = self._get(url)
        if self.mode == "record":
            self.fixture_dir.mkdir(parents=True, exist_ok=True)
            (self.fixture_dir / fixture_name).write_text(text, encoding="utf-8")
        return text

    def close(self) -> None:
        if self._http is not None:
            self._http.close()


class EuropePmcClient(_FixtureClient):
    DEFAULT_BASE = "https://www.ebi.ac.uk/europepmc"

    def __init__(self, base_url: str = DEFAULT_BASE, **kwargs):
        super().__init__(base_url, **kwargs)

    def fetch(self, pmid: str) -> dict:
        url = (
            f"{self.base_url}/webservices/rest/search"
            f"?query=EXT_ID:{pmid}%20AND%20SRC:MED&format=json"
        )
        text = self._fetch_text(url, f"europepmc_{pmid}.json")
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise UpstreamUnavailable(f"unparseable search response for {pmid}") from exc


class DataCiteClient(_FixtureClient):
    DEFAULT_BASE = "https://api.datacite.org"

    def __init__(self, base_url: str = DEFAULT_BASE, **kwargs):
        super().__init__(base_url, **kwargs)

    def fetch(self, doi: str) -> dict:
        slug = doi.lower().replace("/", "_")
        text = self._fetch_text(f"{self.base_url}/dois/{doi}", f"datacite_{slug}.json")
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise UpstreamUnavailable(f"unparseable DOI response for {doi}") from exc


def _clean_orcid(value: str | None) -> str | None:
    if not value:
        return None
    candidate = value.rsplit("/", 1)[-1].strip()
    try:
        validate_orcid(candidate)
    except ValidationError:
        return None
    return candidate


def map_europepmc(pmid: str, payload: dict) -> dict:
    if not payload.get("hitCount"):
        raise NotFound(f"no record for pmid {pmid}")
    results = payload.get("resultList", {}).get("result", [])
    if not results:
        raise NotFound(f"no record for pmid {pmid}")
    result = results[0]
    title = (result.get("title") or "").strip()
    if not title:
        raise MappingError(f"record {pmid} has no title")
    try:
        year = int(result["pubYear"])
    except (KeyError, TypeError, ValueError):
        raise MappingError(f"record {pmid} has no usable publication year")
    authors = []
    for entry in result.get("authorList", {}).get("author", []):
        family = entry.get("lastName") or entry.get("collectiveName") or ""
        if not family:
            continue
        orcid = None
        author_id = entry.get("authorId") or {}
        if author_id.get("type") == "ORCID":
            orcid = _clean_orcid(author_id.get("value"))
        authors.append(
            {"family": family, "given": entry.get("firstName") or entry.get("initials") or "", "orcid": orcid}
        )
    journal_info = result.get("journalInfo", {})
    pub_types = result.get("pubTypeList", {}).get("pubType", [])
    if "Journal Article" in pub_types:
        publication_type = "Journal Article"
    elif pub_types:
        publication_type = pub_types[0]
    else:
        publication_type = "Other"
    page_info = result.get("pageInfo") or ""
    return {
        "title": title,
        "authors": authors,
        "year": year,
        "journal": (journal_info.get("journal") or {}).get("title", ""),
        "doi": result.get("doi"),
        "pmid": result.get("pmid") or pmid,
        "publication_type": publication_type,
        "open_access": result.get("isOpenAccess") == "Y",
        "volume": journal_info.get("volume"),
        "start_page": page_info.split("-")[0] if page_info else None,
    }


def map_datacite(doi: str, payload: dict) -> dict:
    attributes = (payload.get("data") or {}).get("attributes") or {}
    titles = attributes.get("titles") or []
    title = (titles[0].get("title") or "").strip() if titles else ""
    if not title:
        raise MappingError(f"DOI record {doi} has no title")
    year = attributes.get("publicationYear")
    if not isinstance(year, int):
        raise MappingError(f"DOI record {doi} has no usable publication year")
    authors = []
    for creator in attributes.get("creators") or []:
        family = creator.get("familyName") or ""
        given = creator.get("givenName") or ""
        if not family and creator.get("name"):
            # JSON:API name convention is "Family, Given"
            parts = [p.strip() for p in creator["name"].split(",", 1)]
            family = parts[0]
            given = parts[1] if len(parts) > 1 else ""
        if not family:
            continue
        orcid = None
        for ident in creator.get("nameIdentifiers") or []:
            if ident.get("nameIdentifierScheme") == "ORCID":
                orcid = _clean_orcid(ident.get("nameIdentifier"))
        authors.append({"family": family, "given": given, "orcid": orcid})
    container = attributes.get("container") or {}
    rights_blob = json.dumps(attributes.get("rightsList") or []).lower()
    return {
        "title": title,
        "authors": authors,
        "year": year,
        "journal": container.get("title") or attributes.get("publisher") or "",
        "doi": attributes.get("doi") or doi,
        "pmid": None,
        "publication_type": (attributes.get("types") or {}).get("resourceTypeGeneral", "Dataset"),
        "open_access": "openaccess" in rights_blob,
        "volume": None,
        "start_page": None,
    }


class BibliographicImporter:
    def __init__(self, registry, europepmc: EuropePmcClient, datacite: DataCiteClient):
        self.registry = registry
        self.europepmc = europepmc
        self.datacite = datacite

    def import_by_pmid(self, pmid: str):
        if not (pmid or "").isdigit():
            raise ValidationError(f"pmid must be digits: {pmid!r}", fields=["pmid"])
        payload = self.europepmc.fetch(pmid)
        return self.registry.upsert_imported(map_europepmc(pmid, payload))

    def import_by_doi(self, doi: str):
        if not DOI_RE.match(doi or ""):
            raise ValidationError(f"not a DOI: {doi!r}", fields=["doi"])
        payload = self.datacite.fetch(doi)
        return self.registry.upsert_imported(map_datacite(doi, payload))
