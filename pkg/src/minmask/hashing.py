"""Key canonicalisation and MurmurHash3 double hashing for sketch row indexing."""

from __future__ import annotations

from datetime import datetime

import mmh3

from minmask.errors import UsageError
from minmask.models import as_utc_naive

SketchKey = str | bytes | int | datetime

_U32 = 0xFFFFFFFF


def encode_key(key: SketchKey) -> bytes:
    """Render a key as the byte sequence that gets hashed.

    Strings are UTF-8, with undecodable command-line bytes restored as-is.
    Integers use their decimal rendering and timestamps the ISO-8601 rendering
    of their UTC value, so equal values always land in the same cells.
    """
    if isinstance(key, bytes):
        return key
    if isinstance(key, str):
        try:
            return key.encode("utf-8", errors="surrogateescape")
        except UnicodeEncodeError:
            raise UsageError(f"key {key!r} is not valid text") from None
    if isinstance(key, datetime):
        return as_utc_naive(key).isoformat().encode("utf-8")
    if isinstance(key, int) and not isinstance(key, bool):
        return str(key).encode("utf-8")
    raise UsageError(f"Unsupported key type: {type(key).__name__}")


def fold_seed(seed: int) -> int:
    """Fold a 64-bit seed into the 32-bit seed MurmurHash3 accepts."""
    return ((seed >> 32) ^ seed) & _U32


def hash_pair(key: bytes, seed: int) -> tuple[int, int]:
    """Return the two 64-bit halves of the 128-bit MurmurHash3 digest; h2 is forced odd."""
    h1, h2 = mmh3.hash64(key, seed=fold_seed(seed), x64arch=True, signed=False)
    return int(h1), int(h2) | 1


def row_columns(key: bytes, seed: int, depth: int, width: int) -> list[int]:
    """Column index for every row: (h1 + row * h2) mod width."""
    h1, h2 = hash_pair(key, seed)
    return [(h1 + row * h2) % width for row in range(depth)]
