"""Zip dataset ingestion for workflow cases.

An uploaded archive becomes exactly one package: every entry name is
validated before any storage happens, so a single bad path rejects the
whole archive and leaves no partial package behind.
"""

from __future__ import annotations

import io
import posixpath
import zipfile

from ..errors import FairhubError
from ..pidreg.registry import ObjectKind
from ..pkgstore import PutFile, validate_file_name
from .cases import AlmnState, CaseKind, EchoState, IllegalState, WorkflowEngine
from .tiff import ExtractedImageMeta, extract_tiff_metadata
from .xmlmeta import BinaryGarbage, extract_xml_metadata


class NotAZip(FairhubError):
    code = "not_a_zip"
    http_status = 400


class ZipTooLarge(FairhubError):
    code = "zip_too_large"
    http_status = 413


_INGEST_STATES = {
    CaseKind.ALMN: AlmnState.AWAITING_DATA.value,
    CaseKind.ECHO: EchoState.IN_PROGRESS.value,
}


def _stem(name: str) -> str:
    base, _ = posixpath.splitext(name)
    return base


def ingest_dataset_zip(
    engine: WorkflowEngine,
    case_id: str,
    zip_bytes: bytes,
    actor: str | None = None,
) -> tuple[str, list[ExtractedImageMeta]]:
    """Store a zip archive as one dataset package of the case.

    Entry paths are preserved verbatim.  ``.tif``/``.tiff`` entries get
    their header metadata extracted; ``.xml`` entries are flattened, and
    a sidecar XML sharing a TIFF's stem lands in that image's ``extra``
    map.  Extraction failures are recorded per file, never fatal: only a
    malformed archive, an illegal entry path, or a wrong case state
    rejects the upload.
    """
    store = engine.package_store
    if store is None:
        raise IllegalState("no package store configured for ingestion")
    with engine._lock:
        case = engine.get_case(case_id)
        required = _INGEST_STATES[case.kind]
        if case.state != required:
            raise IllegalState(
                f"dataset upload requires state {required}, case is {case.state}"
            )

        if len(zip_bytes) > engine.max_zip_bytes:
            raise ZipTooLarge(
                f"archive exceeds the {engine.max_zip_bytes} byte limit"
            )
        try:
            archive = zipfile.ZipFile(io.BytesIO(zip_bytes))
        except zipfile.BadZipFile as exc:
            raise NotAZip(f"payload is not a zip archive: {exc}") from exc

        entries = [info for info in archive.infolist() if not info.is_dir()]
        total_uncompressed = sum(info.file_size for info in entries)
        if total_uncompressed > engine.max_zip_bytes:
            raise ZipTooLarge(
                f"uncompressed content exceeds the {engine.max_zip_bytes} byte limit"
            )
        # validate every path before touching storage: atomic rejection
        for info in entries:
            validate_file_name(info.filename)

        images: list[ExtractedImageMeta] = []
        xml_maps: dict[str, dict[str, str]] = {}
        image_by_stem: dict[str, ExtractedImageMeta] = {}
        mutations = []
        for info in entries:
            data = archive.read(info)
            name = info.filename
            file_meta: dict = {}
            lowered = name.lower()
            if lowered.endswith((".tif", ".tiff")):
                try:
                    meta = extract_tiff_metadata(data)
                    meta.source_file = name
                    images.append(meta)
                    image_by_stem[_stem(name)] = meta
                    file_meta.update(
                        {
                            "width_px": str(meta.width_px),
                            "height_px": str(meta.height_px),
                            "bits_per_sample": str(meta.bits_per_sample),
                            "byte_order": meta.byte_order.value,
                        }
                    )
                except FairhubError as exc:
                    file_meta["extraction_error"] = exc.code
            elif lowered.endswith(".xml"):
                try:
                    flat = extract_xml_metadata(data)
                    xml_maps[_stem(name)] = flat
                    file_meta.update(flat)
                except BinaryGarbage as exc:
                    file_meta["extraction_error"] = exc.code
            mutations.append(PutFile(name=name, data=data, file_metadata=file_meta))

        # sidecar XML fields enrich the matching image's extracted record
        for stem, flat in xml_maps.items():
            image = image_by_stem.get(stem)
            if image is not None:
                image.extra.update(flat)

        package_metadata = {"case_id": case.case_id, "content": "dataset"}
        if engine.pid_registry is not None:
            record = engine.pid_registry.mint_for_kind(
                ObjectKind.DATASET, engine.case_url(case.case_id)
            )
            package_metadata["dataset_pid"] = record.pid

        pkg = store.create_package(case.acl, package_metadata=package_metadata)
        writer = case.acl.owner_user_id or case.requester
        store.run_transaction(pkg.package_id, mutations, actor=writer)

        case.dataset_packages.append(pkg.package_id)
        if case.kind is CaseKind.ALMN:
            engine.apply_ingest_transition(
                case,
                actor or "system",
                note=f"dataset {pkg.package_id} stored ({len(entries)} files)",
            )
        return pkg.package_id, images
