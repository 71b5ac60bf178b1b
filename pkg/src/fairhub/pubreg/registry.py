"""Article records, asset cross-links, search, and statistics.

The registry is the hub the rest of the portal hangs off: every catalogue
entry, notebook, workflow case, and data package can be linked to an
article here and found again from either side.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from threading import RLock
from typing import Callable

from ..core import AccessScope, Directory, Scope, new_id, validate_orcid
from ..errors import AccessDenied, FairhubError, ValidationError

DOI_RE = re.compile(r"^10\.\d{4,9}/\S+$")
MIN_YEAR = 1800


class UnknownArticle(FairhubError):
    code = "unknown_article"
    http_status = 404


class UnknownAsset(FairhubError):
    code = "unknown_asset"
    http_status = 404


class DuplicateLink(FairhubError):
    code = "duplicate_link"
    http_status = 409


class AssetKind(str, Enum):
    NOTEBOOK = "notebook"
    ANTIBODY = "antibody"
    MOUSE_LINE = "mouse_line"
    CELL_LINE = "cell_line"
    MICROSCOPY_CASE = "microscopy_case"
    ECHO_CASE = "echo_case"
    DATA_PACKAGE = "data_package"


@dataclass
class Author:
    family: str
    given: str = ""
    orcid: str | None = None

    @property
    def display(self) -> str:
        return f"{self.family}, {self.given}" if self.given else self.family

    def to_dict(self) -> dict:
        return {"family": self.family, "given": self.given, "orcid": self.orcid}

    @classmethod
    def from_dict(cls, data: dict) -> "Author":
        return cls(
            family=data["family"], given=data.get("given", ""), orcid=data.get("orcid")
        )


@dataclass
class ScholarlyArticle:
    article_id: str
    title: str
    authors: list[Author]
    year: int
    journal: str
    publication_type: str
    open_access: bool
    doi: str | None = None
    pmid: str | None = None
    volume: str | None = None
    start_page: str | None = None
    groups: set[str] = field(default_factory=set)
    subprojects: set[str] = field(default_factory=set)
    external_resources: list[dict] = field(default_factory=list)
    acl: AccessScope = field(default_factory=lambda: AccessScope(Scope.PROJECT))

    def to_dict(self) -> dict:
        return {
            "article_id": self.article_id,
            "title": self.title,
            "authors": [a.to_dict() for a in self.authors],
            "year": self.year,
            "journal": self.journal,
            "doi": self.doi,
            "pmid": self.pmid,
            "publication_type": self.publication_type,
            "open_access": self.open_access,
            "volume": self.volume,
            "start_page": self.start_page,
            "groups": sorted(self.groups),
            "subprojects": sorted(self.subprojects),
            "external_resources": list(self.external_resources),
            "acl": self.acl.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScholarlyArticle":
        return cls(
            article_id=data["article_id"],
            title=data["title"],
            authors=[Author.from_dict(a) for a in data["authors"]],
            year=data["year"],
            journal=data["journal"],
            publication_type=data["publication_type"],
            open_access=data["open_access"],
            doi=data.get("doi"),
            pmid=data.get("pmid"),
            volume=data.get("volume"),
            start_page=data.get("start_page"),
            groups=set(data.get("groups", [])),
            subprojects=set(data.get("subprojects", [])),
            external_resources=list(data.get("external_resources", [])),
            acl=AccessScope.from_dict(data["acl"]) if data.get("acl") else AccessScope(Scope.PROJECT),
        )


@dataclass(frozen=True)
class AssetLink:
    article_id: str
    asset_kind: AssetKind
    asset_id: str

    def to_dict(self) -> dict:
        return {
            "article_id": self.article_id,
            "asset_kind": self.asset_kind.value,
            "asset_id": self.asset_id,
        }


def validate_article_fields(
    title: str, authors: list[Author], year: int, doi: str | None, pmid: str | None
) -> None:
    problems = []
    if not (title or "").strip():
        problems.append("title")
    if not isinstance(year, int) or not (MIN_YEAR <= year <= date.today().year + 1):
        problems.append("year")
    if doi is not None and not DOI_RE.match(doi):
        problems.append("doi")
    if pmid is not None and not pmid.isdigit():
        problems.append("pmid")
    for author in authors:
        if not author.family.strip():
            problems.append("authors")
            break
    if problems:
        raise ValidationError(
            f"invalid article fields: {', '.join(problems)}", fields=problems
        )
    for author in authors:
        if author.orcid is not None:
            validate_orcid(author.orcid)


class ArticleRegistry:
    """In-memory article store; persistence is snapshot-based via the portal.

    ``asset_resolver(kind, asset_id) -> bool`` answers whether a link
    target currently exists; without one, link targets are not checked.
    """

    def __init__(
        self,
        directory: Directory,
        asset_resolver: Callable[[AssetKind, str], bool] | None = None,
    ):
        self.directory = directory
        self.asset_resolver = asset_resolver
        self._articles: dict[str, ScholarlyArticle] = {}
        self._links: list[AssetLink] = []
        self._lock = RLock()

    # -- CRUD ----------------------------------------------------------

    def create_article(
        self,
        title: str,
        authors: list[Author],
        year: int,
        journal: str,
        publication_type: str = "Journal Article",
        open_access: bool = False,
        doi: str | None = None,
        pmid: str | None = None,
        volume: str | None = None,
        start_page: str | None = None,
        acl: AccessScope | None = None,
        groups: set[str] | None = None,
        subprojects: set[str] | None = None,
        external_resources: list[dict] | None = None,
    ) -> ScholarlyArticle:
        validate_article_fields(title, authors, year, doi, pmid)
        acl = acl or AccessScope(Scope.PROJECT)
        acl.validate()
        with self._lock:
            if doi is not None and self.find_by_doi(doi) is not None:
                raise ValidationError(f"doi {doi} already registered", fields=["doi"])
            article = ScholarlyArticle(
                article_id=new_id("art"),
                title=title,
                authors=list(authors),
                year=year,
                journal=journal,
                publication_type=publication_type,
                open_access=open_access,
                doi=doi,
                pmid=pmid,
                volume=volume,
                start_page=start_page,
                groups=set(groups or ()),
                subprojects=set(subprojects or ()),
                external_resources=list(external_resources or ()),
                acl=acl,
            )
            self._articles[article.article_id] = article
            return article

    def get_article(self, article_id: str) -> ScholarlyArticle:
        article = self._articles.get(article_id)
        if article is None:
            raise UnknownArticle(f"unknown article {article_id}")
        return article

    def find_by_doi(self, doi: str) -> ScholarlyArticle | None:
        needle = doi.lower()
        return next(
            (a for a in self._articles.values() if a.doi and a.doi.lower() == needle),
            None,
        )

    def find_by_pmid(self, pmid: str) -> ScholarlyArticle | None:
        return next((a for a in self._articles.values() if a.pmid == pmid), None)

    def upsert_imported(self, mapped: dict) -> ScholarlyArticle:
        """Persist an import-mapped record, updating any existing match.

        Matching is by pmid first, then doi; portal-side fields (acl,
        groups, links) survive a re-import, bibliographic content is
        replaced by the fresh fetch.
        """
        authors = [Author.from_dict(a) for a in mapped.get("authors", [])]
        validate_article_fields(
            mapped.get("title", ""), authors, mapped.get("year"), mapped.get("doi"), mapped.get("pmid")
        )
        with self._lock:
            existing = None
            if mapped.get("pmid"):
                existing = self.find_by_pmid(mapped["pmid"])
            if existing is None and mapped.get("doi"):
                existing = self.find_by_doi(mapped["doi"])
            if existing is None:
                return self.create_article(
                    title=mapped["title"],
                    authors=authors,
                    year=mapped["year"],
                    journal=mapped.get("journal", ""),
                    publication_type=mapped.get("publication_type", "Other"),
                    open_access=bool(mapped.get("open_access", False)),
                    doi=mapped.get("doi"),
                    pmid=mapped.get("pmid"),
                    volume=mapped.get("volume"),
                    start_page=mapped.get("start_page"),
                )
            existing.title = mapped["title"]
            existing.authors = authors
            existing.year = mapped["year"]
            existing.journal = mapped.get("journal", "")
            existing.publication_type = mapped.get("publication_type", "Other")
            existing.open_access = bool(mapped.get("open_access", False))
            existing.doi = mapped.get("doi") or existing.doi
            existing.pmid = mapped.get("pmid") or existing.pmid
            existing.volume = mapped.get("volume")
            existing.start_page = mapped.get("start_page")
            return existing

    def update_article(self, article_id: str, actor: str | None, **changes) -> ScholarlyArticle:
        with self._lock:
            article = self.get_article(article_id)
            self._check_write(actor, article)
            allowed = {
                "title", "authors", "year", "journal", "publication_type",
                "open_access", "doi", "pmid", "volume", "start_page",
                "groups", "subprojects", "external_resources", "acl",
            }
            unknown = set(changes) - allowed
            if unknown:
                raise ValidationError(f"unknown fields: {sorted(unknown)}", fields=sorted(unknown))
            merged = {**{k: getattr(article, k) for k in allowed}, **changes}
            validate_article_fields(
                merged["title"], merged["authors"], merged["year"], merged["doi"], merged["pmid"]
            )
            if merged["doi"] != article.doi and merged["doi"] is not None:
                clash = self.find_by_doi(merged["doi"])
                if clash is not None and clash.article_id != article_id:
                    raise ValidationError(f"doi {merged['doi']} already registered", fields=["doi"])
            for key, value in changes.items():
                setattr(article, key, value)
            return article

    def _check_write(self, actor: str | None, article: ScholarlyArticle) -> None:
        if not self.directory.can_write(actor, article.acl):
            raise AccessDenied(f"no write access to article {article.article_id}")

    # -- links ---------------------------------------------------------

    def link_asset(
        self, actor: str | None, article_id: str, asset_kind: AssetKind, asset_id: str
    ) -> AssetLink:
        kind = AssetKind(asset_kind)
        with self._lock:
            article = self.get_article(article_id)
            self._check_write(actor, article)
            if self.asset_resolver is not None and not self.asset_resolver(kind, asset_id):
                raise UnknownAsset(f"no {kind.value} with id {asset_id}")
            link = AssetLink(article_id=article_id, asset_kind=kind, asset_id=asset_id)
            if link in self._links:
                raise DuplicateLink(
                    f"{kind.value} {asset_id} already linked to {article_id}"
                )
            self._links.append(link)
            return link

    def unlink_asset(
        self, actor: str | None, article_id: str, asset_kind: AssetKind, asset_id: str
    ) -> None:
        kind = AssetKind(asset_kind)
        with self._lock:
            article = self.get_article(article_id)
            self._check_write(actor, article)
            link = AssetLink(article_id=article_id, asset_kind=kind, asset_id=asset_id)
            if link not in self._links:
                raise UnknownAsset(f"{kind.value} {asset_id} is not linked to {article_id}")
            self._links.remove(link)

    def links_for_article(self, article_id: str) -> list[AssetLink]:
        self.get_article(article_id)
        return [l for l in self._links if l.article_id == article_id]

    def links_for_asset(self, asset_kind: AssetKind, asset_id: str) -> list[AssetLink]:
        kind = AssetKind(asset_kind)
        return [
            l for l in self._links if l.asset_kind is kind and l.asset_id == asset_id
        ]

    # -- search & stats ------------------------------------------------

    def visible_articles(self, requester: str | None) -> list[ScholarlyArticle]:
        return [
            a
            for a in self._articles.values()
            if self.directory.can_access(requester, a.acl)
        ]

    def search_articles(
        self,
        requester: str | None,
        text: str | None = None,
        year_from: int | None = None,
        year_to: int | None = None,
        group: str | None = None,
        publication_type: str | None = None,
        open_access: bool | None = None,
    ) -> list[ScholarlyArticle]:
        needle = (text or "").lower()
        results = []
        for article in self.visible_articles(requester):
            if needle:
                haystack = " ".join(
                    [article.title, article.journal] + [a.display for a in article.authors]
                ).lower()
                if needle not in haystack:
                    continue
            if year_from is not None and article.year < year_from:
                continue
            if year_to is not None and article.year > year_to:
                continue
            if group is not None and group not in article.groups:
                continue
            if publication_type is not None and article.publication_type != publication_type:
                continue
            if open_access is not None and article.open_access != open_access:
                continue
            results.append(article)
        results.sort(key=lambda a: (-a.year, a.title))
        return results

    def compute_stats(self, requester: str | None) -> dict:
        visible = self.visible_articles(requester)
        per_year: dict[int, int] = {}
        open_count = 0
        for article in visible:
            per_year[article.year] = per_year.get(article.year, 0) + 1
            if article.open_access:
                open_count += 1
        closed = len(visible) - open_count
        total = open_count + closed
        return {
            "per_year": [
                {"year": year, "count": per_year[year]} for year in sorted(per_year)
            ],
            "open_access": {
                "open": open_count,
                "closed": closed,
                "ratio": open_count / total if total else 0.0,
            },
        }

    # -- persistence ---------------------------------------------------

    def all_articles(self) -> list[ScholarlyArticle]:
        return list(self._articles.values())

    def export_state(self) -> dict:
        return {
            "articles": [a.to_dict() for a in self._articles.values()],
            "links": [l.to_dict() for l in self._links],
        }

    def import_state(self, state: dict) -> None:
        with self._lock:
            self._articles = {
                rec["article_id"]: ScholarlyArticle.from_dict(rec)
                for rec in state.get("articles", [])
            }
            self._links = [
                AssetLink(
                    article_id=rec["article_id"],
                    asset_kind=AssetKind(rec["asset_kind"]),
                    asset_id=rec["asset_id"],
                )
                for rec in state.get("links", [])
            ]
