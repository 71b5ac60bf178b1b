"""Service-request workflows: state machines, labels, dataset ingestion."""

from .cases import (
    ACTION_TABLE,
    AlmnState,
    AuditEntry,
    CaseKind,
    EchoState,
    IllegalState,
    IllegalTransition,
    LabelRecord,
    Unauthorized,
    UnknownCase,
    WorkflowCase,
    WorkflowEngine,
    labels_csv,
)
from .ingest import NotAZip, ZipTooLarge, ingest_dataset_zip
from .tiff import (
    ByteOrder,
    ExtractedImageMeta,
    MissingDimensions,
    NotTiff,
    TruncatedTiff,
    extract_tiff_metadata,
)
from .xmlmeta import BinaryGarbage, extract_xml_metadata

__all__ = [
    "ACTION_TABLE",
    "AlmnState",
    "AuditEntry",
    "BinaryGarbage",
    "ByteOrder",
    "CaseKind",
    "EchoState",
    "ExtractedImageMeta",
    "IllegalState",
    "IllegalTransition",
    "LabelRecord",
    "MissingDimensions",
    "NotAZip",
    "NotTiff",
    "TruncatedTiff",
    "Unauthorized",
    "UnknownCase",
    "WorkflowCase",
    "WorkflowEngine",
    "ZipTooLarge",
    "extract_tiff_metadata",
    "ingest_dataset_zip",
    "extract_xml_metadata",
    "labels_csv",
]
