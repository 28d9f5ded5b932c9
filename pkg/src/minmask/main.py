"""Command-line entry point for the Min Mask Sketch workbench."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from datetime import datetime
from pathlib import Path

from pydantic import ValidationError

from minmask.config import get_settings
from minmask.errors import MinMaskError
from minmask.models import CommandResult
from minmask.service import WorkbenchService

logger = logging.getLogger(__name__)

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

EXIT_ERROR = 1


def _timestamp(value: str) -> datetime:
    try:
        return datetime.fromisoformat(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO-8601 timestamp: {value!r}") from None


def _add_sketch_params(parser: argparse.ArgumentParser, *, with_seed: bool = True) -> None:
    parser.add_argument("--epsilon", type=float, default=None, help="error-bound factor in (0, 1)")
    parser.add_argument("--confidence", type=float, default=None, help="confidence in (0, 1)")
    if with_seed:
        parser.add_argument("--seed", type=int, default=None, help="unsigned 64-bit hash seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minmask",
        description="Min Mask Sketch workbench: policy bitmask sketches, baselines and space analysis.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="enable debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    create = commands.add_parser("create", help="create an empty sketch file")
    _add_sketch_params(create)
    create.add_argument("--out", type=Path, required=True)

    add = commands.add_parser("add", help="OR a policy mask into a sketch under a key")
    add.add_argument("--sketch", type=Path, required=True)
    add.add_argument("--key", required=True)
    add.add_argument("--mask", required=True, help="unsigned decimal or 0b-prefixed binary")
    add.add_argument("--registry", type=Path, default=None, help="reject bits this registry does not define")

    get = commands.add_parser("get", help="print the estimated mask for a key")
    get.add_argument("--sketch", type=Path, required=True)
    get.add_argument("--key", required=True)
    get.add_argument("--format", dest="fmt", choices=("bits", "dec"), default="dec")
    get.add_argument("--registry", type=Path, default=None, help="pad bit output to the registry width")

    compare = commands.add_parser("compare", help="sketch vs log-based storage space curve")
    _add_sketch_params(compare, with_seed=False)
    compare.add_argument("--max-changes", type=int, default=3000)
    compare.add_argument("--step", type=int, default=1)
    compare.add_argument("--model", default="default", help="default, paper-calibration or custom")
    compare.add_argument("--header-bytes", type=int, default=None)
    compare.add_argument("--cell-bytes", type=int, default=None)
    compare.add_argument("--log-entry-bytes", type=int, default=None)
    compare.add_argument("--csv", type=Path, default=None, help="write the curve here instead of stdout")

    demo = commands.add_parser("demo-health", help="three-way policy resolution over a health CSV")
    demo.add_argument("--csv", type=Path, required=True)
    demo.add_argument("--policy-schedule", type=Path, required=True)
    demo.add_argument("--registry", type=Path, default=None)
    _add_sketch_params(demo)
    demo.add_argument("--requester", default="doctor")
    demo.add_argument("--now", type=_timestamp, default=None, help="evaluation time; defaults to each record's time")
    demo.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")

    measure = commands.add_parser("measure", help="empirical extra-bit error against the exact store")
    _add_sketch_params(measure)
    measure.add_argument("--inserts", type=int, default=10000)
    measure.add_argument("--seeds", type=int, default=20)
    measure.add_argument("--bits", type=int, default=None)
    measure.add_argument("--csv", type=Path, default=None)
    measure.add_argument("--widen", action="store_true", help="also measure at twice the width")

    generate = commands.add_parser("generate-health", help="write a synthetic health CSV and policy schedule")
    generate.add_argument("--out-csv", type=Path, required=True)
    generate.add_argument("--out-schedule", type=Path, required=True)
    generate.add_argument("--start", type=_timestamp, default=datetime(2017, 1, 1, 6, 0, 0))
    generate.add_argument("--minutes", type=int, default=60)
    generate.add_argument("--changes", type=int, default=6)
    generate.add_argument("--seed", type=int, default=None)

    return parser


def _dispatch(service: WorkbenchService, args: argparse.Namespace) -> CommandResult:
    command: str = args.command
    if command == "create":
        return service.create(args.out, epsilon=args.epsilon, confidence=args.confidence, seed=args.seed)
    if command == "add":
        return service.add(args.sketch, args.key, args.mask, args.registry)
    if command == "get":
        return service.get(args.sketch, args.key, fmt=args.fmt, registry_path=args.registry)
    if command == "compare":
        if args.max_changes < 1:
            raise MinMaskError(f"--max-changes must be at least 1, got {args.max_changes}")
        return service.compare(
            epsilon=args.epsilon,
            confidence=args.confidence,
            max_changes=args.max_changes,
            step=args.step,
            model_name=args.model,
            header_bytes=args.header_bytes,
            cell_bytes=args.cell_bytes,
            log_entry_bytes=args.log_entry_bytes,
            csv_path=args.csv,
        )
    if command == "demo-health":
        return service.demo_health(
            args.csv,
            args.policy_schedule,
            registry_path=args.registry,
            epsilon=args.epsilon,
            confidence=args.confidence,
            seed=args.seed,
            requester=args.requester,
            now=args.now,
            out=args.out,
        )
    if command == "measure":
        if args.inserts < 1 or args.seeds < 1:
            raise MinMaskError("--inserts and --seeds must be at least 1")
        return service.measure(
            epsilon=args.epsilon,
            confidence=args.confidence,
            seed=args.seed,
            inserts=args.inserts,
            seeds=args.seeds,
            bits=args.bits,
            csv_path=args.csv,
            widen=args.widen,
        )
    if command == "generate-health":
        return service.generate_health(
            args.out_csv,
            args.out_schedule,
            start=args.start,
            minutes=args.minutes,
            changes=args.changes,
            seed=args.seed,
        )
    raise MinMaskError(f"unknown command {command!r}")


def main(argv: Sequence[str] | None = None) -> int:
    """Run one command; returns the process exit status."""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    level = logging.DEBUG if args.verbose else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(level=level, format=_LOG_FORMAT, stream=sys.stderr)

    service = WorkbenchService(settings)
    try:
        result = _dispatch(service, args)
    except (MinMaskError, ValidationError, OSError) as exc:
        logger.debug("Command %s failed", args.command, exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    if result.text:
        print(result.text)
    if result.exit_code:
        logger.warning("Command %s finished with invariant violations", args.command)
    return result.exit_code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
