"""Tests for the minmask command line."""

from pathlib import Path

import numpy as np
import pytest

from minmask.codec import read_sketch
from minmask.main import main

_HEALTH_REGISTRY = """\
bit=0 name=bt_private kind=private
bit=1 name=bs_private kind=private
bit=2 name=hr_private kind=private
"""


def _run(capsys: pytest.CaptureFixture[str], *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_create_add_get(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    sketch = str(tmp_path / "s.mms")
    assert _run(capsys, "create", "--out", sketch) == (0, "depth=5 width=2719\n", "")
    assert (tmp_path / "s.mms").stat().st_size == 56 + 108_760

    assert _run(capsys, "add", "--sketch", sketch, "--key", "abc", "--mask", "6")[0] == 0
    assert _run(capsys, "get", "--sketch", sketch, "--key", "abc") == (0, "6\n", "")
    assert _run(capsys, "get", "--sketch", sketch, "--key", "abc", "--format", "bits")[1] == "110\n"
    assert _run(capsys, "get", "--sketch", sketch, "--key", "never-added")[1] == "0\n"


def test_add_accepts_binary_literal(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    sketch = str(tmp_path / "s.mms")
    _run(capsys, "create", "--out", sketch)
    _run(capsys, "add", "--sketch", sketch, "--key", "k", "--mask", "0b110")
    _run(capsys, "add", "--sketch", sketch, "--key", "k", "--mask", "1")
    assert _run(capsys, "get", "--sketch", sketch, "--key", "k")[1] == "7\n"


def test_bits_format_is_padded_to_registry(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    sketch = str(tmp_path / "s.mms")
    registry = tmp_path / "health.txt"
    registry.write_text(_HEALTH_REGISTRY, encoding="utf-8")
    _run(capsys, "create", "--out", sketch)
    _run(capsys, "add", "--sketch", sketch, "--key", "r1", "--mask", "0b010", "--registry", str(registry))
    code, out, _ = _run(capsys, "get", "--sketch", sketch, "--key", "r1", "--format", "bits", "--registry", str(registry))
    assert (code, out) == (0, "010\n")


def test_add_rejects_bits_outside_registry(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    sketch = str(tmp_path / "s.mms")
    registry = tmp_path / "health.txt"
    registry.write_text(_HEALTH_REGISTRY, encoding="utf-8")
    _run(capsys, "create", "--out", sketch)
    code, _, err = _run(capsys, "add", "--sketch", sketch, "--key", "r1", "--mask", "8", "--registry", str(registry))
    assert code == 1
    assert "3" in err


def test_create_small_sketch(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = str(tmp_path / "small.mms")
    assert _run(capsys, "create", "--out", out, "--epsilon", "0.1", "--confidence", "0.5")[:2] == (0, "depth=1 width=28\n")


def test_create_rejects_zero_epsilon(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code, out, err = _run(capsys, "create", "--out", str(tmp_path / "s.mms"), "--epsilon", "0")
    assert code == 1
    assert out == ""
    assert err.startswith("error:")
    assert "epsilon" in err
    assert not (tmp_path / "s.mms").exists()


@pytest.mark.parametrize("mask", ["0b12", "-3", "six", "0b", "²", "٣"])
def test_add_rejects_malformed_mask(tmp_path: Path, capsys: pytest.CaptureFixture[str], mask: str) -> None:
    sketch = str(tmp_path / "s.mms")
    _run(capsys, "create", "--out", sketch)
    code, _, err = _run(capsys, "add", "--sketch", sketch, "--key", "k", f"--mask={mask}")
    assert code == 1
    assert "mask" in err


def test_add_rejects_mask_wider_than_cell(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    sketch = str(tmp_path / "s.mms")
    _run(capsys, "create", "--out", sketch)
    assert _run(capsys, "add", "--sketch", sketch, "--key", "k", "--mask", str(1 << 64))[0] == 1


def test_missing_sketch_file(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code, _, err = _run(capsys, "get", "--sketch", str(tmp_path / "nope.mms"), "--key", "k")
    assert code == 1
    assert err.startswith("error:")


def test_corrupt_sketch_file(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "bad.mms"
    path.write_bytes(b"NOPE" + bytes(100))
    code, _, err = _run(capsys, "get", "--sketch", str(path), "--key", "k")
    assert code == 1
    assert "magic" in err


def test_usage_error_exits_2(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as excinfo:
        main(["create"])
    assert excinfo.value.code == 2
    capsys.readouterr()


def test_compare_default_crossover(capsys: pytest.CaptureFixture[str]) -> None:
    code, out, _ = _run(capsys, "compare", "--max-changes", "3000", "--step", "1000")
    lines = out.splitlines()
    assert code == 0
    assert lines[:4] == ["changes,log_bytes,sketch_bytes", "1000,43000,108816", "2000,86000,108816", "3000,129000,108816"]
    assert "crossover_changes=2531" in lines[-1]
    assert lines[-1].startswith("# model=default")


def test_compare_calibration_crossover(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    curve = tmp_path / "curve.csv"
    code, out, _ = _run(capsys, "compare", "--model", "paper-calibration", "--csv", str(curve))
    assert code == 0
    fields = dict(part.split("=") for part in out.split())
    assert 1100 <= int(fields["crossover_changes"]) <= 1400
    assert fields["overhead_ratio"] == "0.1875"
    assert len(curve.read_text(encoding="utf-8").splitlines()) == 3001


def test_compare_single_change(capsys: pytest.CaptureFixture[str]) -> None:
    out = _run(capsys, "compare", "--max-changes", "1")[1]
    assert out.splitlines()[:2] == ["changes,log_bytes,sketch_bytes", "1,43,108816"]
    assert len(out.splitlines()) == 3


def test_compare_custom_model(capsys: pytest.CaptureFixture[str]) -> None:
    out = _run(capsys, "compare", "--max-changes", "1", "--model", "custom", "--log-entry-bytes", "86")[1]
    assert "crossover_changes=1266" in out


def test_compare_overrides_need_custom_model(capsys: pytest.CaptureFixture[str]) -> None:
    assert _run(capsys, "compare", "--log-entry-bytes", "86")[0] == 1


def test_measure_single_insert_has_no_error(capsys: pytest.CaptureFixture[str]) -> None:
    code, out, _ = _run(capsys, "measure", "--inserts", "1", "--seeds", "1")
    assert code == 0
    assert "superset_violations=0" in out.splitlines()
    assert "extra_bit_rate=0.000000" in out.splitlines()


def test_measure_writes_per_seed_csv(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "errors.csv"
    code, out, _ = _run(
        capsys, "measure", "--inserts", "300", "--seeds", "4", "--epsilon", "0.05", "--confidence", "0.9", "--csv", str(path), "--widen"
    )
    assert code == 0
    assert "width=55" in out.splitlines()
    assert "wide_width=109" in out.splitlines()
    assert any(line.startswith("p_value=") for line in out.splitlines())
    assert len(path.read_text(encoding="utf-8").splitlines()) == 5


def test_generate_then_demo_health(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    data, schedule, report = tmp_path / "health.csv", tmp_path / "schedule.log", tmp_path / "report.csv"
    code, out, _ = _run(capsys, "generate-health", "--out-csv", str(data), "--out-schedule", str(schedule), "--seed", "3")
    assert (code, out) == (0, "records=1200 changes=6\n")

    code, out, _ = _run(
        capsys, "demo-health", "--csv", str(data), "--policy-schedule", str(schedule), "--out", str(report)
    )
    assert (code, out) == (0, "records=1200 consistent=1200 inconsistent=0\n")
    lines = report.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1201
    assert lines[1] == f"{lines[1].split(',')[0]},7,7,7,withhold,withhold,withhold,yes"


def test_demo_health_is_deterministic(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    data, schedule = tmp_path / "health.csv", tmp_path / "schedule.log"
    _run(capsys, "generate-health", "--out-csv", str(data), "--out-schedule", str(schedule), "--minutes", "5")
    first = _run(capsys, "demo-health", "--csv", str(data), "--policy-schedule", str(schedule), "--seed", "11")
    second = _run(capsys, "demo-health", "--csv", str(data), "--policy-schedule", str(schedule), "--seed", "11")
    assert first == second
    assert first[1].splitlines()[-1] == "# records=100 consistent=100 inconsistent=0"


def test_demo_health_empty_csv(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    data, schedule = tmp_path / "empty.csv", tmp_path / "schedule.log"
    data.write_text("", encoding="utf-8")
    schedule.write_text("2017-01-01T06:00:00 7\n", encoding="utf-8")
    code, out, _ = _run(capsys, "demo-health", "--csv", str(data), "--policy-schedule", str(schedule))
    assert code == 0
    assert out.splitlines()[-1] == "# records=0 consistent=0 inconsistent=0"


def test_demo_health_reports_bad_schedule_line(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    data, schedule = tmp_path / "empty.csv", tmp_path / "schedule.log"
    data.write_text("", encoding="utf-8")
    schedule.write_text("2017-01-01T06:00:00 7\n2017-01-01T05:00:00 1\n", encoding="utf-8")
    code, _, err = _run(capsys, "demo-health", "--csv", str(data), "--policy-schedule", str(schedule))
    assert code == 1
    assert f"{schedule}:2:" in err


def test_re_adding_same_mask_leaves_cells_unchanged(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    sketch = tmp_path / "s.mms"
    _run(capsys, "create", "--out", str(sketch), "--epsilon", "0.1", "--confidence", "0.9")
    assert _run(capsys, "add", "--sketch", str(sketch), "--key", "row-7", "--mask", "0b101")[0] == 0
    first = read_sketch(sketch)
    assert _run(capsys, "add", "--sketch", str(sketch), "--key", "row-7", "--mask", "0b101")[0] == 0
    second = read_sketch(sketch)

    assert np.array_equal(first.cells, second.cells)
    assert (first.insert_count, second.insert_count) == (1, 2)
    assert _run(capsys, "get", "--sketch", str(sketch), "--key", "row-7")[1] == "5\n"


def test_key_with_undecodable_bytes(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    sketch = str(tmp_path / "s.mms")
    _run(capsys, "create", "--out", sketch)
    assert _run(capsys, "add", "--sketch", sketch, "--key", "caf\udce9", "--mask", "3")[0] == 0
    assert _run(capsys, "get", "--sketch", sketch, "--key", "caf\udce9") == (0, "3\n", "")
    assert _run(capsys, "get", "--sketch", sketch, "--key", "café")[1] == "0\n"


def test_key_with_lone_surrogate_is_rejected(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    sketch = str(tmp_path / "s.mms")
    _run(capsys, "create", "--out", sketch)
    code, _, err = _run(capsys, "add", "--sketch", sketch, "--key", "\ud800", "--mask", "1")
    assert code == 1
    assert "not valid text" in err


def test_measure_twenty_seeds_has_no_violations(capsys: pytest.CaptureFixture[str]) -> None:
    code, out, _ = _run(capsys, "measure", "--inserts", "10000", "--seeds", "20")
    assert code == 0
    assert "superset_violations=0" in out.splitlines()


def test_demo_health_offset_schedule_with_naive_csv(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    data, schedule = tmp_path / "health.csv", tmp_path / "schedule.log"
    data.write_text(
        "time,heart_rate,blood_sugar,body_temp\n2017-01-01T06:00:00,72,95,98.6\n2017-01-01T06:00:03,75,96,98.5\n",
        encoding="utf-8",
    )
    schedule.write_text("2017-01-01T05:00:00+00:00 7\n2017-01-01T08:00:03+02:00 2\n", encoding="utf-8")
    code, out, _ = _run(capsys, "demo-health", "--csv", str(data), "--policy-schedule", str(schedule))
    assert code == 0
    lines = out.splitlines()
    assert lines[-1] == "# records=2 consistent=2 inconsistent=0"
    assert lines[1].split(",")[1:4] == ["7", "7", "7"]
    assert lines[2].split(",")[1:4] == ["2", "2", "2"]
