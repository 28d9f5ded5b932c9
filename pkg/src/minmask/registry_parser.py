"""Parsing of condition registry definition files.

One condition per line::

    bit=<n> name=<s> kind=<k> <key>=<value> ...

Blank lines and lines starting with ``#`` are ignored. ``users`` and
``arguments`` take comma-separated lists; timestamps are ISO-8601.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from pydantic import TypeAdapter, ValidationError

from minmask.errors import ParseError, RegistryError
from minmask.policy import ConditionRegistry, ConditionSpec

_LIST_KEYS: frozenset[str] = frozenset({"users", "arguments"})

_CONDITION_ADAPTER: TypeAdapter[ConditionSpec] = TypeAdapter(ConditionSpec)


def parse_condition_line(text: str) -> dict[str, Any] | None:
    """Split a definition line into raw fields.

    Returns None for blank and comment lines.
    """
    raw = text.strip()
    if not raw or raw.startswith("#"):
        return None

    fields: dict[str, Any] = {}
    for token in raw.split():
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise ValueError(f"expected key=value, got {token!r}")
        if key == "bit":
            key = "bit_position"
        if key in fields:
            raise ValueError(f"duplicate field {key!r}")
        if key in _LIST_KEYS:
            fields[key] = [part.strip() for part in value.split(",") if part.strip()]
        else:
            fields[key] = value
    return fields


def parse_registry(text: str, source: str | None = None) -> ConditionRegistry:
    """Parse a registry definition."""
    conditions: list[ConditionSpec] = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        try:
            fields = parse_condition_line(line)
        except ValueError as exc:
            raise ParseError(str(exc), line=line_number, source=source) from exc
        if fields is None:
            continue
        try:
            conditions.append(_CONDITION_ADAPTER.validate_python(fields))
        except ValidationError as exc:
            details = "; ".join(
                f"{'.'.join(str(part) for part in error['loc']) or 'condition'}: {error['msg']}"
                for error in exc.errors()
            )
            raise ParseError(details, line=line_number, source=source) from exc

    try:
        return ConditionRegistry(conditions)
    except RegistryError as exc:
        raise RegistryError(f"{source or 'registry'}: {exc}") from exc


def load_registry(path: Path) -> ConditionRegistry:
    """Load a registry definition file."""
    return parse_registry(path.read_text(encoding="utf-8"), source=str(path))
