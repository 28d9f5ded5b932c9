"""Workbench service implementing the command surface over sketch, log and CSV files."""

from __future__ import annotations

import io
import logging
from datetime import datetime
from pathlib import Path

from minmask.analysis import (
    compare_widths,
    crossover_changes,
    get_space_model,
    measure_error,
    overhead_ratio,
    random_workload,
    sketch_bytes,
    space_curve,
    write_curve_csv,
    write_error_csv,
)
from minmask.codec import read_sketch, write_sketch
from minmask.config import Settings
from minmask.errors import UsageError
from minmask.health import (
    generate_records,
    generate_schedule,
    load_health_csv,
    resolve_records,
    write_health_csv,
    write_report_csv,
)
from minmask.models import CommandResult, ErrorReport, SketchParams, SpaceModel
from minmask.policy import ConditionRegistry, health_demo_registry
from minmask.registry_parser import load_registry
from minmask.sketch import MinMaskSketch, compute_dimensions
from minmask.store import LogStore

logger = logging.getLogger(__name__)

EXIT_INVARIANT_VIOLATION = 3


class WorkbenchService:
    """Runs workbench commands; flag values that are None fall back to settings."""

    def __init__(self, settings: Settings) -> None:
        self._settings = settings

    def sketch_params(
        self,
        epsilon: float | None = None,
        confidence: float | None = None,
        seed: int | None = None,
    ) -> SketchParams:
        return SketchParams(
            epsilon=self._settings.epsilon if epsilon is None else epsilon,
            confidence=self._settings.confidence if confidence is None else confidence,
            seed=self._settings.seed if seed is None else seed,
        )

    def create(
        self,
        out: Path,
        *,
        epsilon: float | None = None,
        confidence: float | None = None,
        seed: int | None = None,
    ) -> CommandResult:
        """Create an empty sketch file."""
        sketch = MinMaskSketch.create(self.sketch_params(epsilon, confidence, seed))
        write_sketch(out, sketch)
        logger.info("Created %dx%d sketch at %s", sketch.depth, sketch.width, out)
        return CommandResult(text=f"depth={sketch.depth} width={sketch.width}")

    def add(self, sketch_path: Path, key: str, mask_literal: str, registry_path: Path | None = None) -> CommandResult:
        """OR a mask into a sketch file under the given key."""
        mask = parse_mask_literal(mask_literal)
        sketch = read_sketch(sketch_path)
        if registry_path is not None:
            sketch.registry = load_registry(registry_path)
        sketch.add(key, mask)
        write_sketch(sketch_path, sketch)
        return CommandResult(text="")

    def get(
        self,
        sketch_path: Path,
        key: str,
        *,
        fmt: str = "dec",
        registry_path: Path | None = None,
    ) -> CommandResult:
        """Print the estimated mask for a key."""
        sketch = read_sketch(sketch_path)
        registry = load_registry(registry_path) if registry_path is not None else None
        estimate = sketch.get_mask(key).estimate
        return CommandResult(text=format_mask(estimate, fmt, registry))

    def compare(
        self,
        *,
        epsilon: float | None = None,
        confidence: float | None = None,
        max_changes: int = 3000,
        step: int = 1,
        model_name: str = "default",
        header_bytes: int | None = None,
        cell_bytes: int | None = None,
        log_entry_bytes: int | None = None,
        csv_path: Path | None = None,
    ) -> CommandResult:
        """Sketch-vs-log space curve plus the crossover change count."""
        params = self.sketch_params(epsilon, confidence)
        model = self.space_model(model_name, header_bytes, cell_bytes, log_entry_bytes)
        rows = space_curve(params, model, max_changes, step)

        summary = (
            f"model={model.name} sketch_bytes={sketch_bytes(params, model)} "
            f"log_entry_bytes={model.log_entry_bytes} crossover_changes={crossover_changes(params, model)} "
            f"overhead_ratio={overhead_ratio(model):.4f}"
        )
        if csv_path is not None:
            with csv_path.open("w", encoding="utf-8", newline="") as stream:
                write_curve_csv(rows, stream)
            return CommandResult(text=summary)

        buffer = io.StringIO()
        write_curve_csv(rows, buffer)
        return CommandResult(text=f"{buffer.getvalue()}# {summary}")

    def space_model(
        self,
        name: str,
        header_bytes: int | None = None,
        cell_bytes: int | None = None,
        log_entry_bytes: int | None = None,
    ) -> SpaceModel:
        """Preset model, or a custom one built from the default preset and overrides."""
        if name == "custom":
            base = get_space_model("default")
            return SpaceModel.model_validate(
                base.model_dump()
                | {
                    "name": "custom",
                    "sketch_header_bytes": base.sketch_header_bytes if header_bytes is None else header_bytes,
                    "cell_bytes": base.cell_bytes if cell_bytes is None else cell_bytes,
                    "log_entry_bytes": self._settings.log_entry_bytes if log_entry_bytes is None else log_entry_bytes,
                }
            )
        if any(value is not None for value in (header_bytes, cell_bytes, log_entry_bytes)):
            raise UsageError("byte overrides require --model custom")
        return get_space_model(name)

    def measure(
        self,
        *,
        epsilon: float | None = None,
        confidence: float | None = None,
        seed: int | None = None,
        inserts: int = 10000,
        seeds: int = 20,
        bits: int | None = None,
        csv_path: Path | None = None,
        widen: bool = False,
    ) -> CommandResult:
        """Empirical extra-bit rates against the exact store; exit 3 on any superset violation."""
        params = self.sketch_params(epsilon, confidence, seed)
        workload = random_workload(inserts, self._settings.measure_bits if bits is None else bits, params.seed)
        keys = [key for key, _ in workload]

        lines: list[str]
        if widen:
            comparison = compare_widths(workload, keys, params, seeds)
            report = comparison.narrow
            violations = comparison.narrow.superset_violations + comparison.wide.superset_violations
            p_value = "n/a" if comparison.p_value is None else f"{comparison.p_value:.6g}"
            lines = [
                f"width={comparison.narrow_width}",
                *_report_lines(report),
                f"wide_width={comparison.wide_width}",
                f"wide_superset_violations={comparison.wide.superset_violations}",
                f"wide_extra_bit_rate={comparison.wide.extra_bit_rate:.6f}",
                f"wide_any_extra_fraction={comparison.wide.any_extra_fraction:.6f}",
                f"p_value={p_value}",
            ]
        else:
            report = measure_error(workload, keys, params, seeds)
            violations = report.superset_violations
            lines = [f"width={compute_dimensions(params.epsilon, params.confidence)[0]}", *_report_lines(report)]

        if csv_path is not None:
            with csv_path.open("w", encoding="utf-8", newline="") as stream:
                write_error_csv(report, stream)

        exit_code = EXIT_INVARIANT_VIOLATION if violations else 0
        return CommandResult(text="\n".join(lines), exit_code=exit_code)

    def demo_health(
        self,
        csv_path: Path,
        schedule_path: Path,
        *,
        registry_path: Path | None = None,
        epsilon: float | None = None,
        confidence: float | None = None,
        seed: int | None = None,
        requester: str = "doctor",
        now: datetime | None = None,
        out: Path | None = None,
    ) -> CommandResult:
        """Per-record share/withhold report resolved through sketch, exact store and log."""
        records = load_health_csv(csv_path)
        schedule = LogStore.load(schedule_path, before_first=self._settings.before_first_mask)
        registry = load_registry(registry_path) if registry_path is not None else health_demo_registry()
        sketch = MinMaskSketch.create(self.sketch_params(epsilon, confidence, seed), registry=registry)

        rows = resolve_records(records, schedule, sketch, registry, requester=requester, now=now)
        inconsistent = sum(not row.consistent for row in rows)
        summary = f"records={len(rows)} consistent={len(rows) - inconsistent} inconsistent={inconsistent}"
        exit_code = EXIT_INVARIANT_VIOLATION if inconsistent else 0

        if out is not None:
            with out.open("w", encoding="utf-8", newline="") as stream:
                write_report_csv(rows, stream)
            return CommandResult(text=summary, exit_code=exit_code)

        buffer = io.StringIO()
        write_report_csv(rows, buffer)
        return CommandResult(text=f"{buffer.getvalue()}# {summary}", exit_code=exit_code)

    def generate_health(
        self,
        out_csv: Path,
        out_schedule: Path,
        *,
        start: datetime,
        minutes: int = 60,
        changes: int = 6,
        seed: int | None = None,
    ) -> CommandResult:
        """Write a synthetic health CSV and a policy-change schedule."""
        if minutes < 0:
            raise UsageError(f"minutes must be non-negative, got {minutes}")
        records = generate_records(start, minutes, self._settings.seed if seed is None else seed)
        with out_csv.open("w", encoding="utf-8", newline="") as stream:
            write_health_csv(records, stream)
        schedule = generate_schedule(start, minutes, changes)
        schedule.dump(out_schedule)
        return CommandResult(text=f"records={len(records)} changes={len(schedule)}")


def parse_mask_literal(raw: str) -> int:
    """Parse an unsigned decimal or ``0b``-prefixed binary mask literal."""
    value = raw.strip()
    if value[:2].lower() == "0b":
        digits = value[2:].replace("_", "")
        if not digits or any(char not in "01" for char in digits):
            raise UsageError(f"malformed binary mask literal {raw!r}")
        return int(digits, 2)
    if not (value.isascii() and value.isdecimal()):
        raise UsageError(f"malformed mask literal {raw!r}; use unsigned decimal or 0b binary")
    return int(value)


def format_mask(mask: int, fmt: str, registry: ConditionRegistry | None = None) -> str:
    """Render a mask as decimal or as a bit string padded to the registry's width."""
    if fmt == "dec":
        return str(mask)
    if fmt == "bits":
        width = registry.highest_bit + 1 if registry is not None else 0
        return format(mask, f"0{width}b") if width else format(mask, "b")
    raise UsageError(f"unknown format {fmt!r}; use bits or dec")


def _report_lines(report: ErrorReport) -> list[str]:
    return [
        f"trials={report.trials}",
        f"superset_violations={report.superset_violations}",
        f"extra_bit_rate={report.extra_bit_rate:.6f}",
        f"any_extra_fraction={report.any_extra_fraction:.6f}",
    ]
