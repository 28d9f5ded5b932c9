"""Shared Pydantic models for the Min Mask Sketch workbench."""

from __future__ import annotations

from datetime import UTC, datetime
from typing import Annotated

from pydantic import AfterValidator, BaseModel, ConfigDict, Field

CELL_WIDTH_BITS: int = 64
MASK_LIMIT: int = 1 << CELL_WIDTH_BITS


def as_utc_naive(value: datetime) -> datetime:
    """Convert an offset-aware timestamp to naive UTC; naive timestamps are already taken as UTC."""
    if value.utcoffset() is None:
        return value.replace(tzinfo=None)
    return value.astimezone(UTC).replace(tzinfo=None)


# Datetime field type for every timestamp that gets compared against another.
Timestamp = Annotated[datetime, AfterValidator(as_utc_naive)]


class SketchParams(BaseModel):
    """Tuning knobs of a sketch: error-bound factor, confidence and hash seed.

    Range checks live in ``compute_dimensions`` so that every entry point
    reports the same ``ParameterError``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    epsilon: float = 0.001
    confidence: float = 0.99
    seed: int = 0
    cell_width_bits: int = CELL_WIDTH_BITS


class QueryEstimate(BaseModel):
    """Answer to a sketch lookup: the chosen mask and the per-row cells it was picked from."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    estimate: int
    candidates: list[int]


class SharingContext(BaseModel):
    """Inputs the sharing conditions are checked against."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    now: Timestamp
    requester: str
    record_ordinal: int = Field(default=0, ge=0)
    rng_seed: int = Field(default=0, ge=0, lt=MASK_LIMIT)
    attributes: dict[str, str] = Field(default_factory=dict)


class Decision(BaseModel):
    """Share/withhold outcome of a policy evaluation."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    share: bool
    reason: str
    condition: str | None = None


class HealthRecord(BaseModel):
    """One row of the health tracker table."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    time: Timestamp
    heart_rate: int = Field(ge=-32768, le=32767)
    blood_sugar: int = Field(ge=-32768, le=32767)
    body_temp: float


class HealthReportRow(BaseModel):
    """Three-way policy resolution for one health record."""

    model_config = ConfigDict(extra="forbid")

    time: Timestamp
    log_mask: int
    exact_mask: int
    sketch_mask: int
    decisions: dict[str, bool]
    consistent: bool


class SpaceModel(BaseModel):
    """Byte accounting used to compare the sketch against the exact and log-based stores."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "custom"
    sketch_header_bytes: int = Field(gt=0)
    cell_bytes: int = Field(default=8, gt=0)
    log_entry_bytes: int = Field(default=43, gt=0)
    exact_policy_bytes_per_row: int = Field(default=3, ge=0)
    data_bytes_per_row: int = Field(default=16, gt=0)


class CommandResult(BaseModel):
    """Output of a workbench command: data for stdout plus the exit status."""

    model_config = ConfigDict(extra="forbid")

    text: str
    exit_code: int = 0


class SeedError(BaseModel):
    """Error measurements for a single seed."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int
    queries: int
    superset_violations: int
    extra_bit_rate: float
    any_extra_fraction: float


class ErrorReport(BaseModel):
    """Aggregated error measurements across seeds."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    trials: int
    superset_violations: int
    extra_bit_rate: float
    any_extra_fraction: float
    per_seed: list[SeedError] = Field(default_factory=list)


class WidthComparison(BaseModel):
    """Paired error measurements for a sketch and its doubled-width counterpart."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    narrow_width: int
    wide_width: int
    narrow: ErrorReport
    wide: ErrorReport
    p_value: float | None
