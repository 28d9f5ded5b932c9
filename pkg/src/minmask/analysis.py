"""Space accounting and empirical error measurement.

The byte model compares three ways of storing per-record policies: the
fixed-size sketch, a log of policy changes that grows with every change,
and exact per-row boolean columns. Error runs replay a workload into a
sketch and an exact store per seed and count the extra bits the sketch
reports.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Sequence
from typing import TextIO

import numpy as np
from scipy import stats

from minmask.codec import HEADER_BYTES
from minmask.errors import ParameterError, UsageError
from minmask.hashing import SketchKey
from minmask.models import MASK_LIMIT, ErrorReport, SeedError, SketchParams, SpaceModel, WidthComparison
from minmask.sketch import CELL_BYTES, Estimator, MinMaskSketch, compute_dimensions
from minmask.store import ExactStore

logger = logging.getLogger(__name__)

DEFAULT_LOG_ENTRY_BYTES: int = 43

# "default" accounts for this package's own file format; "paper-calibration"
# is a C struct of two 32-bit dimension fields followed by 32-bit cells.
SPACE_MODELS: dict[str, SpaceModel] = {
    "default": SpaceModel(
        name="default",
        sketch_header_bytes=HEADER_BYTES,
        cell_bytes=CELL_BYTES,
        log_entry_bytes=DEFAULT_LOG_ENTRY_BYTES,
    ),
    "paper-calibration": SpaceModel(
        name="paper-calibration",
        sketch_header_bytes=8,
        cell_bytes=4,
        log_entry_bytes=DEFAULT_LOG_ENTRY_BYTES,
    ),
}

Workload = Sequence[tuple[SketchKey, int]]


def get_space_model(name: str) -> SpaceModel:
    """Look up a preset space model by name."""
    try:
        return SPACE_MODELS[name]
    except KeyError:
        known = ", ".join(sorted(SPACE_MODELS))
        raise ParameterError(f"unknown space model {name!r}; known: {known}") from None


def sketch_bytes(params: SketchParams, model: SpaceModel) -> int:
    """Header plus grid; independent of how many items were inserted."""
    width, depth = compute_dimensions(params.epsilon, params.confidence)
    return model.sketch_header_bytes + depth * width * model.cell_bytes


def log_bytes(change_count: int, model: SpaceModel) -> int:
    """Size of a change log holding ``change_count`` entries."""
    if change_count < 0:
        raise ParameterError(f"change_count must be non-negative, got {change_count}")
    return change_count * model.log_entry_bytes


def exact_bytes(row_count: int, model: SpaceModel) -> int:
    """Size of the per-row boolean policy columns for ``row_count`` rows."""
    if row_count < 0:
        raise ParameterError(f"row_count must be non-negative, got {row_count}")
    return row_count * model.exact_policy_bytes_per_row


def crossover_changes(params: SketchParams, model: SpaceModel) -> int:
    """Smallest change count at which the log is at least as large as the sketch."""
    return -(-sketch_bytes(params, model) // model.log_entry_bytes)


def overhead_ratio(model: SpaceModel) -> float:
    """Policy bytes per row relative to data bytes per row."""
    return model.exact_policy_bytes_per_row / model.data_bytes_per_row


def space_curve(params: SketchParams, model: SpaceModel, max_changes: int, step: int = 1) -> list[tuple[int, int, int]]:
    """Rows of (changes, log_bytes, sketch_bytes) for changes = step, 2*step, ... <= max_changes."""
    if max_changes < 1:
        raise ParameterError(f"max_changes must be at least 1, got {max_changes}")
    if step < 1:
        raise ParameterError(f"step must be at least 1, got {step}")
    fixed = sketch_bytes(params, model)
    return [(changes, log_bytes(changes, model), fixed) for changes in range(step, max_changes + 1, step)]


def random_workload(inserts: int, bits: int, rng_seed: int) -> list[tuple[SketchKey, int]]:
    """Distinct keys, each with one randomly chosen condition bit out of ``bits``."""
    if inserts < 1:
        raise ParameterError(f"inserts must be at least 1, got {inserts}")
    if not 1 <= bits <= 64:
        raise ParameterError(f"bits must lie in [1, 64], got {bits}")
    positions = np.random.default_rng(rng_seed).integers(0, bits, size=inserts)
    return [(f"item-{index}", 1 << int(position)) for index, position in enumerate(positions)]


def _measure_seed(
    workload: Workload,
    query_keys: Sequence[SketchKey],
    params: SketchParams,
    estimator: Estimator,
) -> SeedError:
    sketch = MinMaskSketch.create(params, estimator=estimator)
    exact = ExactStore()
    for key, mask in workload:
        sketch.add(key, mask)
        exact.add(key, mask)

    violations = 0
    extra_bits = 0
    with_extra = 0
    for key in query_keys:
        truth = exact.get(key)
        estimate = sketch.get_mask(key).estimate
        if truth & ~estimate:
            violations += 1
        extra = (estimate & ~truth).bit_count()
        extra_bits += extra
        with_extra += extra > 0

    queries = len(query_keys)
    return SeedError(
        seed=params.seed,
        queries=queries,
        superset_violations=violations,
        extra_bit_rate=extra_bits / queries if queries else 0.0,
        any_extra_fraction=with_extra / queries if queries else 0.0,
    )


def measure_error(
    workload: Workload,
    query_keys: Sequence[SketchKey],
    params: SketchParams,
    seed_count: int,
    *,
    estimator: Estimator = Estimator.MIN,
) -> ErrorReport:
    """Replay the workload under ``seed_count`` consecutive seeds and aggregate the errors."""
    if not workload:
        raise UsageError("measure_error needs a non-empty workload")
    if seed_count < 1:
        raise ParameterError(f"seed_count must be at least 1, got {seed_count}")

    per_seed = [
        _measure_seed(
            workload,
            query_keys,
            params.model_copy(update={"seed": (params.seed + offset) % MASK_LIMIT}),
            estimator,
        )
        for offset in range(seed_count)
    ]

    trials = sum(row.queries for row in per_seed)
    violations = sum(row.superset_violations for row in per_seed)
    if violations:
        logger.warning("Superset violations detected: %d of %d queries", violations, trials)
    return ErrorReport(
        trials=trials,
        superset_violations=violations,
        extra_bit_rate=sum(row.extra_bit_rate * row.queries for row in per_seed) / trials if trials else 0.0,
        any_extra_fraction=sum(row.any_extra_fraction * row.queries for row in per_seed) / trials if trials else 0.0,
        per_seed=per_seed,
    )


def compare_widths(
    workload: Workload,
    query_keys: Sequence[SketchKey],
    params: SketchParams,
    seed_count: int,
) -> WidthComparison:
    """Measure at epsilon and epsilon / 2 (about twice the width) with the same seeds.

    ``p_value`` is the one-sided Wilcoxon signed-rank test that the narrow
    sketch has the larger extra-bit rate; None when every pair is tied.
    """
    wide_params = params.model_copy(update={"epsilon": params.epsilon / 2})
    narrow = measure_error(workload, query_keys, params, seed_count)
    wide = measure_error(workload, query_keys, wide_params, seed_count)

    narrow_rates = [row.extra_bit_rate for row in narrow.per_seed]
    wide_rates = [row.extra_bit_rate for row in wide.per_seed]
    p_value: float | None
    if all(left == right for left, right in zip(narrow_rates, wide_rates, strict=True)):
        p_value = None
    else:
        p_value = float(stats.wilcoxon(narrow_rates, wide_rates, alternative="greater").pvalue)

    return WidthComparison(
        narrow_width=compute_dimensions(params.epsilon, params.confidence)[0],
        wide_width=compute_dimensions(wide_params.epsilon, wide_params.confidence)[0],
        narrow=narrow,
        wide=wide,
        p_value=p_value,
    )


def write_curve_csv(rows: Sequence[tuple[int, int, int]], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["changes", "log_bytes", "sketch_bytes"])
    writer.writerows(rows)


def write_error_csv(report: ErrorReport, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["seed", "extra_bit_rate", "any_extra_fraction"])
    for row in report.per_seed:
        writer.writerow([row.seed, f"{row.extra_bit_rate:.6f}", f"{row.any_extra_fraction:.6f}"])
