"""Baseline TIFF 6.0 header parsing.

Only the structural minimum is read: byte order mark, magic number, and
the first image file directory's dimension and bit-depth tags.  Pixel
data is never decoded.  Every read is bounds-checked so arbitrary input
can only ever raise the typed errors below.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum

from ..errors import FairhubError

TAG_IMAGE_WIDTH = 256
TAG_IMAGE_LENGTH = 257
TAG_BITS_PER_SAMPLE = 258

# field types we take scalar values from
TYPE_SHORT = 3
TYPE_LONG = 4


class NotTiff(FairhubError):
    code = "not_tiff"


class TruncatedTiff(FairhubError):
    code = "truncated_tiff"


class MissingDimensions(FairhubError):
    code = "missing_dimensions"


class ByteOrder(str, Enum):
    LITTLE_ENDIAN = "LittleEndian"
    BIG_ENDIAN = "BigEndian"


@dataclass
class ExtractedImageMeta:
    width_px: int
    height_px: int
    bits_per_sample: int
    byte_order: ByteOrder
    source_file: str = ""
    extra: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "width_px": self.width_px,
            "height_px": self.height_px,
            "bits_per_sample": self.bits_per_sample,
            "byte_order": self.byte_order.value,
            "source_file": self.source_file,
            "extra": dict(self.extra),
        }


def _read(data: bytes, fmt: str, offset: int) -> int:
    size = struct.calcsize(fmt)
    if offset < 0 or offset + size > len(data):
        raise TruncatedTiff(
            f"need {size} bytes at offset {offset}, buffer has {len(data)}"
        )
    return struct.unpack_from(fmt, data, offset)[0]


def extract_tiff_metadata(data: bytes, source_file: str = "") -> ExtractedImageMeta:
    if len(data) < 8:
        raise NotTiff("buffer shorter than a TIFF header")
    order_mark = data[:2]
    if order_mark == b"II":
        order, prefix = ByteOrder.LITTLE_ENDIAN, "<"
    elif order_mark == b"MM":
        order, prefix = ByteOrder.BIG_ENDIAN, ">"
    else:
        raise NotTiff(f"unknown byte order mark {order_mark!r}")
    if _read(data, prefix + "H", 2) != 42:
        raise NotTiff("magic number is not 42")
    ifd_offset = _read(data, prefix + "I", 4)
    entry_count = _read(data, prefix + "H", ifd_offset)
    found: dict[int, int] = {}
    for index in range(entry_count):
        base = ifd_offset + 2 + index * 12
        tag = _read(data, prefix + "H", base)
        if tag not in (TAG_IMAGE_WIDTH, TAG_IMAGE_LENGTH, TAG_BITS_PER_SAMPLE):
            # the 12-byte entry must still fit the buffer
            _read(data, prefix + "I", base + 8)
            continue
        field_type = _read(data, prefix + "H", base + 2)
        count = _read(data, prefix + "I", base + 4)
        if field_type not in (TYPE_SHORT, TYPE_LONG) or count < 1:
            continue
        value_fmt = prefix + ("H" if field_type == TYPE_SHORT else "I")
        if count == 1:
            value = _read(data, value_fmt, base + 8)
        else:
            # multi-valued (e.g. per-channel bit depths): first value at the
            # pointed-to offset stands in for the scalar
            value = _read(data, value_fmt, _read(data, prefix + "I", base + 8))
        found[tag] = value
    if TAG_IMAGE_WIDTH not in found or TAG_IMAGE_LENGTH not in found:
        missing = [
            str(t) for t in (TAG_IMAGE_WIDTH, TAG_IMAGE_LENGTH) if t not in found
        ]
        raise MissingDimensions(f"required tags absent: {', '.join(missing)}")
    width = found[TAG_IMAGE_WIDTH]
    height = found[TAG_IMAGE_LENGTH]
    if width < 1 or height < 1:
        raise MissingDimensions(f"degenerate dimensions {width}x{height}")
    return ExtractedImageMeta(
        width_px=width,
        height_px=height,
        bits_per_sample=found.get(TAG_BITS_PER_SAMPLE, 1),
        byte_order=order,
        source_file=source_file,
    )
