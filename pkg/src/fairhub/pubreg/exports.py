"""Article export and re-import in RIS, CSV, and JSON.

All three formats are deterministic byte-for-byte so export → import →
export round trips compare equal.  CSV carries the fixed nine-column
subset; JSON carries the full canonical record.
"""

from __future__ import annotations

import csv
import io
import json

from ..errors import ValidationError
from .registry import Author, ScholarlyArticle

CSV_HEADER = [
    "article_id",
    "title",
    "authors",
    "year",
    "journal",
    "doi",
    "pmid",
    "publication_type",
    "open_access",
]

_JOURNAL_ARTICLE = "Journal Article"


def _ris_record(article: ScholarlyArticle) -> list[str]:
    lines = [f"TY  - {'JOUR' if article.publication_type == _JOURNAL_ARTICLE else 'GEN'}"]
    lines.append(f"TI  - {article.title}")
    for author in article.authors:
        lines.append(f"AU  - {author.display}")
    lines.append(f"PY  - {article.year}")
    if article.journal:
        lines.append(f"JO  - {article.journal}")
    if article.volume:
        lines.append(f"VL  - {article.volume}")
    if article.start_page:
        lines.append(f"SP  - {article.start_page}")
    if article.doi:
        lines.append(f"DO  - {article.doi}")
        lines.append(f"UR  - https://doi.org/{article.doi}")
    elif article.external_resources:
        lines.append(f"UR  - {article.external_resources[0]['url']}")
    lines.append("ER  - ")
    return lines


def to_ris(articles: list[ScholarlyArticle]) -> bytes:
    if not articles:
        return b""
    blocks = ["\n".join(_ris_record(a)) for a in articles]
    return ("\n\n".join(blocks) + "\n").encode("utf-8")


def to_csv(articles: list[ScholarlyArticle]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for article in articles:
        writer.writerow(
            [
                article.article_id,
                article.title,
                "; ".join(a.display for a in article.authors),
                article.year,
                article.journal,
                article.doi or "",
                article.pmid or "",
                article.publication_type,
                "true" if article.open_access else "false",
            ]
        )
    return buffer.getvalue().encode("utf-8")


def _parse_author(display: str) -> Author:
    if "," in display:
        family, given = display.split(",", 1)
        return Author(family=family.strip(), given=given.strip())
    return Author(family=display.strip())


def from_csv(data: bytes) -> list[dict]:
    """Parse an exported CSV back into plain field dicts."""
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("CSV payload is empty")
    if header != CSV_HEADER:
        raise ValidationError(f"unexpected CSV header: {header}", fields=["header"])
    records = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ValidationError(f"row has {len(row)} columns, expected {len(CSV_HEADER)}")
        rec = dict(zip(CSV_HEADER, row))
        rec["authors"] = [
            _parse_author(part).to_dict()
            for part in rec["authors"].split("; ")
            if part
        ]
        rec["year"] = int(rec["year"])
        rec["doi"] = rec["doi"] or None
        rec["pmid"] = rec["pmid"] or None
        rec["open_access"] = rec["open_access"] == "true"
        records.append(rec)
    return records


def to_json(articles: list[ScholarlyArticle]) -> bytes:
    payload = json.dumps(
        [a.to_dict() for a in articles], ensure_ascii=False, indent=2
    )
    return (payload + "\n").encode("utf-8")


def from_json(data: bytes) -> list[ScholarlyArticle]:
    return [ScholarlyArticle.from_dict(rec) for rec in json.loads(data.decode("utf-8"))]
