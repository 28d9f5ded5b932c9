"""Health tracker demo: CSV records, synthetic data, and three-way policy resolution."""

from __future__ import annotations

import csv
import logging
from collections.abc import Sequence
from datetime import datetime, timedelta
from pathlib import Path
from typing import TextIO

import numpy as np
from pydantic import ValidationError

from minmask.errors import ParseError
from minmask.models import HealthRecord, HealthReportRow, SharingContext
from minmask.policy import HEALTH_ATTRIBUTE_CONDITIONS, ConditionRegistry, evaluate_attributes
from minmask.sketch import MinMaskSketch
from minmask.store import ExactStore, LogStore

logger = logging.getLogger(__name__)

HEALTH_CSV_FIELDS: tuple[str, ...] = ("time", "heart_rate", "blood_sugar", "body_temp")
REPORT_CSV_FIELDS: tuple[str, ...] = (
    "time",
    "log_mask",
    "exact_mask",
    "sketch_mask",
    "heart_rate",
    "blood_sugar",
    "body_temp",
    "consistent",
)

SAMPLE_INTERVAL = timedelta(seconds=3)

# A day of policy changes, cycled: everything private, exercising (only blood
# sugar private), private, sleeping (only blood sugar shared), private, after a meal.
_SCHEDULE_MASKS: tuple[int, ...] = (0b111, 0b010, 0b111, 0b101, 0b111, 0b101)


def parse_health_csv(stream: TextIO, source: str | None = None) -> list[HealthRecord]:
    """Read records; the header must be ``time,heart_rate,blood_sugar,body_temp``."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        return []
    if tuple(field.strip() for field in header) != HEALTH_CSV_FIELDS:
        raise ParseError(f"expected header {','.join(HEALTH_CSV_FIELDS)}", line=1, source=source)

    records: list[HealthRecord] = []
    seen: set[datetime] = set()
    for row in reader:
        line_number = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(HEALTH_CSV_FIELDS):
            raise ParseError(f"expected {len(HEALTH_CSV_FIELDS)} fields, got {len(row)}", line=line_number, source=source)
        try:
            record = HealthRecord.model_validate(
                {name: value.strip() for name, value in zip(HEALTH_CSV_FIELDS, row, strict=True)}
            )
        except ValidationError as exc:
            details = "; ".join(f"{error['loc'][0]}: {error['msg']}" for error in exc.errors())
            raise ParseError(details, line=line_number, source=source) from exc
        if record.time in seen:
            raise ParseError(f"duplicate time {record.time.isoformat()}", line=line_number, source=source)
        seen.add(record.time)
        records.append(record)
    return records


def load_health_csv(path: Path) -> list[HealthRecord]:
    with path.open(encoding="utf-8", newline="") as stream:
        return parse_health_csv(stream, source=str(path))


def write_health_csv(records: Sequence[HealthRecord], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(HEALTH_CSV_FIELDS)
    for record in records:
        writer.writerow([record.time.isoformat(), record.heart_rate, record.blood_sugar, f"{record.body_temp:.1f}"])


def generate_records(start: datetime, minutes: int, rng_seed: int) -> list[HealthRecord]:
    """Synthetic readings every three seconds (20 per minute)."""
    count = minutes * 20
    rng = np.random.default_rng(rng_seed)
    heart_rates = rng.integers(55, 160, size=count)
    blood_sugars = rng.integers(70, 180, size=count)
    body_temps = rng.normal(98.4, 0.6, size=count)
    return [
        HealthRecord(
            time=start + index * SAMPLE_INTERVAL,
            heart_rate=int(heart_rates[index]),
            blood_sugar=int(blood_sugars[index]),
            body_temp=round(float(body_temps[index]), 1),
        )
        for index in range(count)
    ]


def generate_schedule(start: datetime, minutes: int, changes: int) -> LogStore:
    """``changes`` policy changes spread evenly over the period, the first one at ``start``."""
    schedule = LogStore()
    if changes <= 0:
        return schedule
    spacing = timedelta(minutes=minutes) / changes
    for index in range(changes):
        schedule.append(start + index * spacing, _SCHEDULE_MASKS[index % len(_SCHEDULE_MASKS)])
    return schedule


def resolve_records(
    records: Sequence[HealthRecord],
    schedule: LogStore,
    sketch: MinMaskSketch,
    registry: ConditionRegistry,
    *,
    requester: str,
    now: datetime | None = None,
) -> list[HealthReportRow]:
    """Resolve every record's policy through the log, an exact store and the sketch.

    Records are keyed by their timestamp. The attribute decisions use the
    sketch's answer, since that is the store a deployment would read.
    """
    exact = ExactStore()
    for record in records:
        mask = schedule.lookup(record.time)
        exact.add(record.time, mask)
        sketch.add(record.time, mask)

    rows: list[HealthReportRow] = []
    for ordinal, record in enumerate(records):
        log_mask = schedule.lookup(record.time)
        exact_mask = exact.get(record.time)
        sketch_mask = sketch.get_mask(record.time).estimate
        consistent = log_mask == exact_mask and exact_mask & ~sketch_mask == 0
        if not consistent:
            logger.warning("Inconsistent policy for %s: log=%d exact=%d sketch=%d", record.time, log_mask, exact_mask, sketch_mask)

        ctx = SharingContext(
            now=now or record.time,
            requester=requester,
            record_ordinal=ordinal,
            attributes={
                "heart_rate": str(record.heart_rate),
                "blood_sugar": str(record.blood_sugar),
                "body_temp": str(record.body_temp),
            },
        )
        decisions = evaluate_attributes(sketch_mask, registry, ctx, HEALTH_ATTRIBUTE_CONDITIONS)
        rows.append(
            HealthReportRow(
                time=record.time,
                log_mask=log_mask,
                exact_mask=exact_mask,
                sketch_mask=sketch_mask,
                decisions={attribute: decision.share for attribute, decision in decisions.items()},
                consistent=consistent,
            )
        )
    return rows


def write_report_csv(rows: Sequence[HealthReportRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(REPORT_CSV_FIELDS)
    for row in rows:
        writer.writerow(
            [
                row.time.isoformat(),
                row.log_mask,
                row.exact_mask,
                row.sketch_mask,
                *("share" if row.decisions[attribute] else "withhold" for attribute in ("heart_rate", "blood_sugar", "body_temp")),
                "yes" if row.consistent else "no",
            ]
        )
