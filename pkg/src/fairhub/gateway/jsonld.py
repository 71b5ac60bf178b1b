"""JSON-LD rendering of articles plus the server-rendered HTML pages.

The canonical byte serialization matters here: the object embedded in an
article's HTML page must be byte-identical to the bare JSON body served
for the same article, so both go through canonical_bytes and the HTML
template splices the decoded bytes in unchanged.
"""

from __future__ import annotations

import html
import json
from typing import Callable

from ..pubreg.registry import AssetKind, AssetLink, ScholarlyArticle

SCHEMA_CONTEXT = "https://schema.org"

# catalogue kind -> schema.org type for nested "mentions" entries
_MENTION_TYPE = {
    AssetKind.NOTEBOOK: "CreativeWork",
    AssetKind.ANTIBODY: "BioChemEntity",
    AssetKind.MOUSE_LINE: "BioChemEntity",
    AssetKind.CELL_LINE: "BioChemEntity",
    AssetKind.MICROSCOPY_CASE: "CreativeWork",
    AssetKind.ECHO_CASE: "CreativeWork",
    AssetKind.DATA_PACKAGE: "Dataset",
}

# asset_describer(kind, asset_id) -> {"name": ..., "pid": ... or None}
AssetDescriber = Callable[[AssetKind, str], dict]


def article_jsonld(
    article: ScholarlyArticle,
    links: list[AssetLink],
    asset_describer: AssetDescriber | None = None,
) -> dict:
    authors = []
    for author in article.authors:
        person: dict = {"@type": "Person", "familyName": author.family}
        if author.given:
            person["givenName"] = author.given
        if author.orcid:
            person["identifier"] = f"https://orcid.org/{author.orcid}"
        authors.append(person)

    identifiers = []
    if article.doi:
        identifiers.append(
            {"@type": "PropertyValue", "propertyID": "DOI", "value": article.doi}
        )
    if article.pmid:
        identifiers.append(
            {"@type": "PropertyValue", "propertyID": "PMID", "value": article.pmid}
        )

    obj: dict = {
        "@context": SCHEMA_CONTEXT,
        "@type": "ScholarlyArticle",
        "headline": article.title,
        "author": authors,
        "datePublished": str(article.year),
    }
    if article.journal:
        part: dict = {"@type": "Periodical", "name": article.journal}
        if article.volume:
            part["volumeNumber"] = article.volume
        obj["isPartOf"] = part
    if article.start_page:
        obj["pageStart"] = article.start_page
    if identifiers:
        obj["identifier"] = identifiers
    obj["isAccessibleForFree"] = article.open_access

    mentions = []
    for link in links:
        entry: dict = {
            "@type": _MENTION_TYPE.get(link.asset_kind, "Thing"),
            "additionalType": link.asset_kind.value,
        }
        described = asset_describer(link.asset_kind, link.asset_id) if asset_describer else {}
        name = (described or {}).get("name")
        if name:
            entry["name"] = name
        pid = (described or {}).get("pid")
        if pid:
            entry["identifier"] = {
                "@type": "PropertyValue",
                "propertyID": "Handle",
                "value": pid,
            }
        else:
            entry["identifier"] = {
                "@type": "PropertyValue",
                "propertyID": "fairhub",
                "value": link.asset_id,
            }
        mentions.append(entry)
    if mentions:
        obj["mentions"] = mentions
    return obj


def canonical_bytes(obj: dict) -> bytes:
    return (json.dumps(obj, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


_PAGE = """<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<meta name="viewport" content="width=device-width, initial-scale=1">
<title>{title}</title>
<style>
body {{ font-family: system-ui, sans-serif; margin: 2rem auto; max-width: 46rem; padding: 0 1rem; color: #1b1b1b; }}
dt {{ font-weight: 600; margin-top: .6rem; }}
dd {{ margin: 0; }}
footer {{ margin-top: 3rem; font-size: .85rem; color: #666; }}
</style>
{head_extra}</head>
<body>
{body}
<footer>fairhub research data portal</footer>
</body>
</html>
"""


def article_html(article: ScholarlyArticle, jsonld_payload: bytes) -> str:
    """Human-readable article page with the machine object embedded as-is."""
    author_line = html.escape("; ".join(a.display for a in article.authors))
    rows = [
        ("Authors", author_line),
        ("Year", str(article.year)),
        ("Journal", html.escape(article.journal or "")),
    ]
    if article.doi:
        rows.append(
            ("DOI", f'<a href="https://doi.org/{html.escape(article.doi)}">{html.escape(article.doi)}</a>')
        )
    if article.pmid:
        rows.append(("PMID", html.escape(article.pmid)))
    rows.append(("Open access", "yes" if article.open_access else "no"))
    dl = "\n".join(f"<dt>{k}</dt><dd>{v}</dd>" for k, v in rows)
    body = f"<h1>{html.escape(article.title)}</h1>\n<dl>\n{dl}\n</dl>"
    # the block content must stay byte-identical to the bare representation,
    # so the payload goes in verbatim with no added whitespace
    head_extra = (
        '<script type="application/ld+json">'
        + jsonld_payload.decode("utf-8")
        + "</script>\n"
    )
    return _PAGE.format(
        title=html.escape(article.title), head_extra=head_extra, body=body
    )


def landing_html(view: dict) -> str:
    """Minimal public landing page; identical regardless of who asks."""
    rows = [
        ("PID", html.escape(view["pid"])),
        ("Type", html.escape(view["object_kind"])),
        ("Group", html.escape(view["owning_group_name"] or "")),
        ("Registered", html.escape(view["created_at"])),
    ]
    dl = "\n".join(f"<dt>{k}</dt><dd>{v}</dd>" for k, v in rows)
    body = (
        f"<h1>{html.escape(view['title_or_designation'])}</h1>\n"
        f"<p>This persistent identifier refers to a registered research object. "
        f"Access to the underlying data may be restricted.</p>\n<dl>\n{dl}\n</dl>"
    )
    return _PAGE.format(
        title=html.escape(view["title_or_designation"]), head_extra="", body=body
    )


def not_found_html(pid: str) -> str:
    body = (
        "<h1>Unknown identifier</h1>\n"
        f"<p>No object is registered under <code>{html.escape(pid)}</code> "
        "on this portal instance.</p>"
    )
    return _PAGE.format(title="Unknown identifier", head_extra="", body=body)
