"""Tests for the exact and log-based policy stores."""

from datetime import UTC, datetime, timedelta
from pathlib import Path

import numpy as np
import pytest

from minmask.errors import CapacityError, OrderingError, ParseError
from minmask.models import SketchParams
from minmask.sketch import MinMaskSketch
from minmask.store import ExactStore, LogStore

_T0 = datetime(2017, 1, 1, 6, 0)


def _day_log() -> LogStore:
    log = LogStore()
    for hour, mask in [(6, 0b111), (9, 0b010), (11, 0b111), (13, 0b101), (18, 0b111), (22, 0b101)]:
        log.append(datetime(2017, 1, 1, hour, 0), mask)
    return log


def test_exact_store_get_absent_is_zero() -> None:
    assert ExactStore().get("missing") == 0


def test_exact_store_accumulates_by_or() -> None:
    store = ExactStore()
    store.add("row", 5).add("row", 2)
    assert store.get("row") == 7
    assert len(store) == 1
    assert "row" in store
    assert "other" not in store
    assert 3.5 not in store


def test_exact_store_rejects_wide_mask() -> None:
    with pytest.raises(CapacityError):
        ExactStore().add("row", 1 << 64)


def test_log_store_appends_in_order() -> None:
    log = _day_log()
    assert len(log) == 6
    assert log.entries[0] == (datetime(2017, 1, 1, 6, 0), 0b111)


def test_log_store_rejects_equal_timestamp() -> None:
    log = _day_log()
    with pytest.raises(OrderingError):
        log.append(datetime(2017, 1, 1, 22, 0), 0)
    assert len(log) == 6


def test_log_store_rejects_earlier_timestamp() -> None:
    with pytest.raises(OrderingError):
        _day_log().append(datetime(2017, 1, 1, 7, 0), 0)


def test_first_append_governs_its_own_timestamp() -> None:
    log = LogStore()
    assert log.lookup(_T0) == 0
    log.append(_T0, 0b110)
    assert log.lookup(_T0) == 0b110


def test_lookup_before_first_entry() -> None:
    assert _day_log().lookup(datetime(2017, 1, 1, 5, 59)) == 0
    assert LogStore(before_first=0b111).lookup(_T0) == 0b111


def test_lookup_uses_latest_change_at_or_before() -> None:
    log = _day_log()
    assert log.lookup(datetime(2017, 1, 1, 6, 0)) == 0b111
    assert log.lookup(datetime(2017, 1, 1, 9, 0)) == 0b010
    assert log.lookup(datetime(2017, 1, 1, 10, 59, 59)) == 0b010
    assert log.lookup(datetime(2017, 1, 1, 23, 30)) == 0b101


def test_change_governs_until_next_change() -> None:
    log = LogStore([(datetime(2017, 1, 1, 10, 0), 1), (datetime(2017, 1, 1, 12, 0), 2)])
    assert log.lookup(datetime(2017, 1, 1, 11, 59)) == 1
    assert log.lookup(datetime(2017, 1, 1, 12, 0)) == 2


def test_lookup_matches_linear_scan() -> None:
    rng = np.random.default_rng(17)
    gaps = rng.integers(1, 600, size=10_000)
    log = LogStore()
    when = _T0
    for gap in gaps:
        when += timedelta(seconds=int(gap))
        log.append(when, int(rng.integers(0, 1 << 8)))
    entries = log.entries

    def scan(query: datetime) -> int:
        found = 0
        for timestamp, mask in entries:
            if timestamp > query:
                break
            found = mask
        return found

    span = int((when - _T0).total_seconds())
    for offset in rng.integers(-100, span + 100, size=300):
        query = _T0 + timedelta(seconds=int(offset))
        assert log.lookup(query) == scan(query)
    for timestamp, mask in entries[::997]:
        assert log.lookup(timestamp) == mask


def test_dumps_and_loads(tmp_path: Path) -> None:
    log = _day_log()
    text = log.dumps()
    assert text.splitlines()[1] == "2017-01-01T09:00:00 2"
    restored = LogStore.loads("# schedule\n\n" + text)
    assert restored.entries == log.entries

    path = tmp_path / "schedule.log"
    log.dump(path)
    assert LogStore.load(path).entries == log.entries


@pytest.mark.parametrize(
    ("text", "line"),
    [
        ("2017-01-01T06:00:00\n", 1),
        ("2017-01-01T06:00:00 7\nyesterday 3\n", 2),
        ("2017-01-01T06:00:00 -1\n", 1),
        ("2017-01-01T06:00:00 0x7\n", 1),
        ("2017-01-01T06:00:00 7\n# note\n2017-01-01T05:00:00 1\n", 3),
        (f"2017-01-01T06:00:00 {1 << 64}\n", 1),
    ],
)
def test_loads_reports_bad_lines(text: str, line: int) -> None:
    with pytest.raises(ParseError) as excinfo:
        LogStore.loads(text, source="schedule.log")
    assert excinfo.value.line == line
    assert str(excinfo.value).startswith(f"schedule.log:{line}:")


def test_sketch_is_superset_of_exact_store() -> None:
    sketch = MinMaskSketch.create(SketchParams(epsilon=0.02, confidence=0.9, seed=31))
    exact = ExactStore()
    rng = np.random.default_rng(31)
    keys = rng.integers(0, 5000, size=100_000)
    masks = rng.integers(0, 1 << 12, size=100_000)
    for key, mask in zip(keys, masks, strict=True):
        sketch.add(int(key), int(mask))
        exact.add(int(key), int(mask))

    assert len(exact) == len(set(keys.tolist()))
    for key in exact.keys():
        truth = exact.get(key)
        assert truth & ~sketch.get_mask(key).estimate == 0


def test_offset_timestamps_are_stored_as_utc() -> None:
    log = LogStore.loads("2017-01-01T05:00:00 2\n2017-01-01T07:00:00+01:00 3\n")
    assert [timestamp for timestamp, _ in log.entries] == [datetime(2017, 1, 1, 5, 0), datetime(2017, 1, 1, 6, 0)]
    assert log.lookup(datetime(2017, 1, 1, 5, 30)) == 2
    assert log.lookup(datetime(2017, 1, 1, 6, 0, tzinfo=UTC)) == 3


def test_offset_timestamps_are_ordered_by_instant() -> None:
    with pytest.raises(ParseError) as excinfo:
        LogStore.loads("2017-01-01T05:00:00 2\n2017-01-01T06:00:00+02:00 3\n")
    assert excinfo.value.line == 2


@pytest.mark.parametrize("mask", ["²", "٣"])
def test_loads_rejects_non_ascii_digits(mask: str) -> None:
    with pytest.raises(ParseError, match="unsigned decimal"):
        LogStore.loads(f"2017-01-01T06:00:00 {mask}\n")
