"""Binary sketch file format.

Layout, little-endian::

    magic "MMSK" | version u16 | reserved u16 | epsilon f64 | confidence f64
    seed u64 | width u32 | depth u32 | cell_width_bits u8 | 7 zero bytes
    insert_count u64 | depth * width cells as u64, row-major
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

from minmask.errors import (
    BadMagicError,
    DimensionMismatchError,
    MinMaskError,
    SketchFormatError,
    TruncatedSketchError,
    UnsupportedVersionError,
)
from minmask.models import CELL_WIDTH_BITS, SketchParams
from minmask.sketch import CELL_BYTES, MinMaskSketch, compute_dimensions

logger = logging.getLogger(__name__)

MAGIC: bytes = b"MMSK"
FORMAT_VERSION: int = 1

_HEADER = struct.Struct("<4sHHddQIIB7sQ")
HEADER_BYTES: int = _HEADER.size
_PADDING = bytes(7)


def serialize(sketch: MinMaskSketch) -> bytes:
    """Encode a sketch, header first, then the grid."""
    params = sketch.params
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        0,
        params.epsilon,
        params.confidence,
        params.seed,
        sketch.width,
        sketch.depth,
        CELL_WIDTH_BITS,
        _PADDING,
        sketch.insert_count,
    )
    return header + sketch.cells.astype("<u8", copy=False).tobytes(order="C")


def deserialize(payload: bytes) -> MinMaskSketch:
    """Decode a sketch, rejecting anything that is not a well-formed version-1 payload."""
    if len(payload) < len(MAGIC):
        raise TruncatedSketchError(f"payload is {len(payload)} bytes, too short for the magic")
    if payload[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"bad magic {payload[: len(MAGIC)]!r}, expected {MAGIC!r}")
    if len(payload) < HEADER_BYTES:
        raise TruncatedSketchError(f"payload is {len(payload)} bytes, header needs {HEADER_BYTES}")

    (
        _,
        version,
        reserved,
        epsilon,
        confidence,
        seed,
        width,
        depth,
        cell_width_bits,
        padding,
        insert_count,
    ) = _HEADER.unpack_from(payload)

    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported format version {version}, expected {FORMAT_VERSION}")
    if reserved != 0 or padding != _PADDING:
        raise SketchFormatError("reserved header bytes must be zero")
    if cell_width_bits != CELL_WIDTH_BITS:
        raise SketchFormatError(f"cell width {cell_width_bits} bits is not supported")

    try:
        expected = compute_dimensions(epsilon, confidence)
    except MinMaskError as exc:
        raise DimensionMismatchError(f"stored parameters are invalid: {exc}") from exc
    if (width, depth) != expected:
        raise DimensionMismatchError(
            f"stored grid {depth}x{width} does not match {expected[1]}x{expected[0]} "
            f"implied by epsilon={epsilon} confidence={confidence}"
        )

    expected_size = HEADER_BYTES + depth * width * CELL_BYTES
    if len(payload) < expected_size:
        raise TruncatedSketchError(f"payload is {len(payload)} bytes, grid needs {expected_size}")
    if len(payload) > expected_size:
        raise SketchFormatError(f"payload has {len(payload) - expected_size} trailing bytes")

    cells = (
        np.frombuffer(payload, dtype="<u8", count=depth * width, offset=HEADER_BYTES)
        .astype(np.uint64)
        .reshape(depth, width)
    )
    params = SketchParams(epsilon=epsilon, confidence=confidence, seed=seed)
    return MinMaskSketch(params, cells=cells, insert_count=insert_count)


def write_sketch(path: Path, sketch: MinMaskSketch) -> None:
    """Write a sketch file."""
    path.write_bytes(serialize(sketch))
    logger.debug("Wrote sketch to %s (%d inserts)", path, sketch.insert_count)


def read_sketch(path: Path) -> MinMaskSketch:
    """Read a sketch file."""
    return deserialize(path.read_bytes())
