"""Flatten XML documents into string maps for file metadata.

Well-formed XML becomes slash-joined element paths; repeated sibling
tags get 1-based ``[i]`` suffixes and attributes appear as ``path/@name``.
Text that is not XML still yields ``{"raw": ...}`` so any text-based
sidecar format survives ingestion; only undecodable bytes are rejected.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from ..errors import FairhubError


class BinaryGarbage(FairhubError):
    code = "binary_garbage"


def _flatten(element: ET.Element, path: str, out: dict[str, str]) -> None:
    for name, value in element.attrib.items():
        out[f"{path}/@{name}"] = value
    children = list(element)
    if not children:
        text = (element.text or "").strip()
        if text:
            out[path] = text
        return
    counts: dict[str, int] = {}
    for child in children:
        counts[child.tag] = counts.get(child.tag, 0) + 1
    seen: dict[str, int] = {}
    for child in children:
        if counts[child.tag] > 1:
            seen[child.tag] = seen.get(child.tag, 0) + 1
            child_path = f"{path}/{child.tag}[{seen[child.tag]}]"
        else:
            child_path = f"{path}/{child.tag}"
        _flatten(child, child_path, out)


def extract_xml_metadata(data: bytes) -> dict[str, str]:
    try:
        root = ET.fromstring(data)
    except ET.ParseError:
        try:
            return {"raw": data.decode("utf-8")}
        except UnicodeDecodeError as exc:
            raise BinaryGarbage("neither XML nor UTF-8 text") from exc
    out: dict[str, str] = {}
    _flatten(root, root.tag, out)
    return out
