"""Package-oriented transactional storage with hot/cold tiering."""

from .store import (
    ChecksumMismatch,
    ConcurrentConflict,
    DeleteFile,
    MigrationReport,
    Package,
    PackageStore,
    PathViolation,
    PutFile,
    SetFileMetadata,
    SetPackageMetadata,
    StorageFull,
    StoredFile,
    Tier,
    UnknownFile,
    UnknownPackage,
    validate_file_name,
)

__all__ = [
    "ChecksumMismatch",
    "ConcurrentConflict",
    "DeleteFile",
    "MigrationReport",
    "Package",
    "PackageStore",
    "PathViolation",
    "PutFile",
    "SetFileMetadata",
    "SetPackageMetadata",
    "StorageFull",
    "StoredFile",
    "Tier",
    "UnknownFile",
    "UnknownPackage",
    "validate_file_name",
]
