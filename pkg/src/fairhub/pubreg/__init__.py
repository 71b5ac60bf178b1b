"""Published-data registry: bibliographic hub, cross-links, search, export."""

from .exports import from_csv, from_json, to_csv, to_json, to_ris
from .imports import (
    BibliographicImporter,
    DataCiteClient,
    EuropePmcClient,
    FixtureMissing,
    MappingError,
    NotFound,
    UpstreamUnavailable,
)
from .registry import (
    ArticleRegistry,
    AssetKind,
    AssetLink,
    Author,
    DuplicateLink,
    ScholarlyArticle,
    UnknownArticle,
    UnknownAsset,
)

__all__ = [
    "ArticleRegistry",
    "AssetKind",
    "AssetLink",
    "Author",
    "BibliographicImporter",
    "DataCiteClient",
    "DuplicateLink",
    "EuropePmcClient",
    "FixtureMissing",
    "MappingError",
    "NotFound",
    "ScholarlyArticle",
    "UnknownArticle",
    "UnknownAsset",
    "UpstreamUnavailable",
    "from_csv",
    "from_json",
    "to_csv",
    "to_json",
    "to_ris",
]
