"""Baseline policy stores: the exact per-item store and the log-based range store."""

from __future__ import annotations

import logging
from bisect import bisect_right
from collections.abc import Iterable, Iterator
from datetime import datetime
from pathlib import Path

from minmask.errors import OrderingError, ParseError
from minmask.hashing import SketchKey, encode_key
from minmask.models import as_utc_naive
from minmask.sketch import check_mask

logger = logging.getLogger(__name__)


class ExactStore:
    """Per-item masks, one entry per key; the ground truth the sketch is checked against."""

    def __init__(self) -> None:
        self._entries: dict[bytes, int] = {}

    def add(self, key: SketchKey, mask: int) -> ExactStore:
        """OR the mask into the key's entry."""
        check_mask(mask)
        encoded = encode_key(key)
        self._entries[encoded] = self._entries.get(encoded, 0) | mask
        return self

    def get(self, key: SketchKey) -> int:
        """Accumulated mask for the key, 0 if it was never added."""
        return self._entries.get(encode_key(key), 0)

    def keys(self) -> Iterator[bytes]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: object) -> bool:
        if not isinstance(key, str | bytes | int | datetime):
            return False
        return encode_key(key) in self._entries


class LogStore:
    """Timestamp-ordered policy changes; a change governs every time until the next one."""

    def __init__(self, entries: Iterable[tuple[datetime, int]] = (), *, before_first: int = 0) -> None:
        self._times: list[datetime] = []
        self._masks: list[int] = []
        self.before_first = check_mask(before_first)
        for timestamp, mask in entries:
            self.append(timestamp, mask)

    def append(self, timestamp: datetime, mask: int) -> LogStore:
        """Record a policy change; timestamps must strictly increase.

        Offset-aware timestamps are stored as naive UTC.
        """
        check_mask(mask)
        timestamp = as_utc_naive(timestamp)
        if self._times and timestamp <= self._times[-1]:
            raise OrderingError(
                f"log timestamp {timestamp.isoformat()} does not follow {self._times[-1].isoformat()}"
            )
        self._times.append(timestamp)
        self._masks.append(mask)
        return self

    def lookup(self, when: datetime) -> int:
        """Mask of the latest change at or before ``when``; ``before_first`` if there is none."""
        index = bisect_right(self._times, as_utc_naive(when))
        if index == 0:
            return self.before_first
        return self._masks[index - 1]

    @property
    def entries(self) -> list[tuple[datetime, int]]:
        return list(zip(self._times, self._masks, strict=True))

    def __len__(self) -> int:
        return len(self._times)

    def dumps(self) -> str:
        """Render as ``<ISO-8601 timestamp> <unsigned decimal mask>`` lines."""
        return "".join(f"{timestamp.isoformat()} {mask}\n" for timestamp, mask in self.entries)

    def dump(self, path: Path) -> None:
        path.write_text(self.dumps(), encoding="utf-8")
        logger.debug("Wrote %d log entries to %s", len(self), path)

    @classmethod
    def loads(cls, text: str, *, source: str | None = None, before_first: int = 0) -> LogStore:
        """Parse the text log format; blank lines and ``#`` comments are skipped."""
        store = cls(before_first=before_first)
        for line_number, line in enumerate(text.splitlines(), start=1):
            raw = line.strip()
            if not raw or raw.startswith("#"):
                continue
            parts = raw.split()
            if len(parts) != 2:
                raise ParseError("expected '<timestamp> <mask>'", line=line_number, source=source)
            try:
                timestamp = datetime.fromisoformat(parts[0])
            except ValueError as exc:
                raise ParseError(f"bad timestamp {parts[0]!r}", line=line_number, source=source) from exc
            if not (parts[1].isascii() and parts[1].isdecimal()):
                raise ParseError(f"mask must be an unsigned decimal, got {parts[1]!r}", line=line_number, source=source)
            try:
                store.append(timestamp, int(parts[1]))
            except ValueError as exc:
                raise ParseError(str(exc), line=line_number, source=source) from exc
        return store

    @classmethod
    def load(cls, path: Path, *, before_first: int = 0) -> LogStore:
        return cls.loads(path.read_text(encoding="utf-8"), source=str(path), before_first=before_first)
