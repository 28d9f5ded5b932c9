"""Sharing conditions, condition registries and policy evaluation.

A policy is a bitmask: bit i set means condition i is active and must
admit the request before a record is shared. Conditions combine by
conjunction, so adding bits can only turn a share into a withhold.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from enum import StrEnum
from functools import lru_cache, reduce
from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from minmask.errors import RegistryError, UnknownConditionError
from minmask.models import CELL_WIDTH_BITS, MASK_LIMIT, Decision, SharingContext, Timestamp

logger = logging.getLogger(__name__)


class ConditionKind(StrEnum):
    """Kinds of sharing condition a bit can stand for."""

    RECORD_LIMIT = "record_limit"
    TIME_WINDOW = "time_window"
    RANDOM_SAMPLE = "random_sample"
    BIASED_SAMPLE = "biased_sample"
    USER_SET = "user_set"
    PRIVATE = "private"


BiasPredicate = Callable[[SharingContext, Sequence[str]], bool]


def _attribute_equals(ctx: SharingContext, args: Sequence[str]) -> bool:
    key, value = args[0], args[1]
    return ctx.attributes.get(key) == value


def _attribute_in(ctx: SharingContext, args: Sequence[str]) -> bool:
    key, values = args[0], args[1:]
    return ctx.attributes.get(key) in values


def _requester_in(ctx: SharingContext, args: Sequence[str]) -> bool:
    listed = ctx.attributes.get(args[0], "")
    return ctx.requester in {part.strip() for part in listed.split(",") if part.strip()}


# name -> (minimum argument count, predicate)
BIAS_PREDICATES: dict[str, tuple[int, BiasPredicate]] = {
    "attribute_equals": (2, _attribute_equals),
    "attribute_in": (2, _attribute_in),
    "requester_in": (1, _requester_in),
}


@lru_cache(maxsize=256)
def sample_ordinals(population: int, sample_size: int, rng_seed: int) -> frozenset[int]:
    """Ordinals drawn without replacement from [0, population) by a seeded generator.

    Cost grows with ``sample_size``, not ``population``.
    """
    chosen = np.random.default_rng(rng_seed).choice(population, size=min(sample_size, population), replace=False)
    return frozenset(int(ordinal) for ordinal in chosen)


class _Condition(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    bit_position: int = Field(ge=0, lt=CELL_WIDTH_BITS)
    name: str = Field(min_length=1)

    @property
    def bit(self) -> int:
        return 1 << self.bit_position

    def admits(self, ctx: SharingContext) -> bool:
        raise NotImplementedError


class RecordLimitCondition(_Condition):
    """Share only the first ``max_records`` records of a result stream."""

    kind: Literal["record_limit"] = "record_limit"
    max_records: int = Field(ge=0)

    def admits(self, ctx: SharingContext) -> bool:
        return ctx.record_ordinal < self.max_records


class TimeWindowCondition(_Condition):
    """Share only while ``start <= now < end``."""

    kind: Literal["time_window"] = "time_window"
    start: Timestamp
    end: Timestamp

    @model_validator(mode="after")
    def _check_order(self) -> TimeWindowCondition:
        if self.end <= self.start:
            raise ValueError("time window end must be after start")
        return self

    def admits(self, ctx: SharingContext) -> bool:
        return self.start <= ctx.now < self.end


class RandomSampleCondition(_Condition):
    """Share a seeded pseudo-random sample of ``sample_size`` ordinals out of ``population``."""

    kind: Literal["random_sample"] = "random_sample"
    sample_size: int = Field(ge=0)
    population: int = Field(gt=0, lt=2**63)
    rng_seed: int | None = Field(default=None, ge=0, lt=MASK_LIMIT)

    def admits(self, ctx: SharingContext) -> bool:
        seed = ctx.rng_seed if self.rng_seed is None else self.rng_seed
        return ctx.record_ordinal in sample_ordinals(self.population, self.sample_size, seed)


class BiasedSampleCondition(_Condition):
    """Share records for which a named predicate over the record attributes holds."""

    kind: Literal["biased_sample"] = "biased_sample"
    predicate: str
    arguments: tuple[str, ...] = ()

    @field_validator("predicate")
    @classmethod
    def _known_predicate(cls, value: str) -> str:
        if value not in BIAS_PREDICATES:
            known = ", ".join(sorted(BIAS_PREDICATES))
            raise ValueError(f"unknown predicate {value!r}; known: {known}")
        return value

    @model_validator(mode="after")
    def _check_arity(self) -> BiasedSampleCondition:
        minimum, _ = BIAS_PREDICATES[self.predicate]
        if len(self.arguments) < minimum:
            raise ValueError(f"predicate {self.predicate!r} needs at least {minimum} argument(s)")
        return self

    def admits(self, ctx: SharingContext) -> bool:
        _, predicate = BIAS_PREDICATES[self.predicate]
        return predicate(ctx, self.arguments)


class UserSetCondition(_Condition):
    """Share only with the listed users."""

    kind: Literal["user_set"] = "user_set"
    users: frozenset[str]

    def admits(self, ctx: SharingContext) -> bool:
        return ctx.requester in self.users


class PrivateCondition(_Condition):
    """Never share."""

    kind: Literal["private"] = "private"

    def admits(self, ctx: SharingContext) -> bool:
        return False


ConditionSpec = Annotated[
    RecordLimitCondition
    | TimeWindowCondition
    | RandomSampleCondition
    | BiasedSampleCondition
    | UserSetCondition
    | PrivateCondition,
    Field(discriminator="kind"),
]


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the positions of the set bits, lowest first."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class ConditionRegistry:
    """Immutable mapping from bit positions to sharing conditions."""

    def __init__(self, conditions: Iterable[ConditionSpec]) -> None:
        by_bit: dict[int, ConditionSpec] = {}
        by_name: dict[str, ConditionSpec] = {}
        for condition in conditions:
            if condition.bit_position in by_bit:
                raise RegistryError(f"bit {condition.bit_position} is defined twice")
            if condition.name in by_name:
                raise RegistryError(f"condition name {condition.name!r} is defined twice")
            by_bit[condition.bit_position] = condition
            by_name[condition.name] = condition
        self._by_bit = dict(sorted(by_bit.items()))
        self._by_name = by_name
        self._defined_mask = reduce(lambda acc, bit: acc | (1 << bit), self._by_bit, 0)

    @property
    def conditions(self) -> tuple[ConditionSpec, ...]:
        return tuple(self._by_bit.values())

    @property
    def highest_bit(self) -> int:
        """Highest defined bit position, or -1 for an empty registry."""
        return max(self._by_bit, default=-1)

    @property
    def defined_mask(self) -> int:
        return self._defined_mask

    def get(self, bit_position: int) -> ConditionSpec | None:
        return self._by_bit.get(bit_position)

    def by_name(self, name: str) -> ConditionSpec:
        try:
            return self._by_name[name]
        except KeyError:
            raise RegistryError(f"no condition named {name!r}") from None

    def mask_for(self, *names: str) -> int:
        """Mask with the named conditions active."""
        return compose(self.by_name(name).bit for name in names)

    def unknown_bits(self, mask: int) -> list[int]:
        return list(iter_bits(mask & ~self._defined_mask))

    def validate_mask(self, mask: int) -> int:
        """Raise UnknownConditionError if the mask sets an undefined bit."""
        unknown = self.unknown_bits(mask)
        if unknown:
            raise UnknownConditionError(unknown)
        return mask

    def __len__(self) -> int:
        return len(self._by_bit)

    def __iter__(self) -> Iterator[ConditionSpec]:
        return iter(self._by_bit.values())


def compose(masks: Iterable[int]) -> int:
    """Combine policies: the active conditions of the result are the union of the inputs'."""
    return reduce(lambda left, right: left | right, masks, 0)


def evaluate(mask: int, registry: ConditionRegistry, ctx: SharingContext, *, strict: bool = False) -> Decision:
    """Share iff every active condition admits the context.

    Bits without a registry entry fail closed; with ``strict`` they raise
    UnknownConditionError instead.
    """
    unknown = registry.unknown_bits(mask)
    if unknown:
        if strict:
            raise UnknownConditionError(unknown)
        logger.warning("Withholding: mask %#x sets unknown condition bit(s) %s", mask, unknown)
        return Decision(share=False, reason=f"unknown condition bit(s): {', '.join(map(str, unknown))}")

    for bit_position in iter_bits(mask):
        condition = registry.get(bit_position)
        assert condition is not None
        if not condition.admits(ctx):
            return Decision(
                share=False,
                reason=f"{condition.kind} condition {condition.name!r} does not admit the request",
                condition=condition.name,
            )

    if mask == 0:
        return Decision(share=True, reason="no active conditions")
    return Decision(share=True, reason="all active conditions admit the request")


def evaluate_attributes(
    mask: int,
    registry: ConditionRegistry,
    ctx: SharingContext,
    attribute_conditions: Mapping[str, str],
) -> dict[str, Decision]:
    """Decide per attribute.

    Each attribute sees only its own condition bit from ``attribute_conditions``
    plus every bit that is not tied to an attribute.
    """
    attribute_bits = {attribute: registry.by_name(name).bit for attribute, name in attribute_conditions.items()}
    common = mask & ~compose(attribute_bits.values())
    return {
        attribute: evaluate(common | (mask & bit), registry, ctx) for attribute, bit in attribute_bits.items()
    }


# Per-attribute privacy bits of the health tracker table, lowest bit first.
HEALTH_ATTRIBUTE_CONDITIONS: dict[str, str] = {
    "body_temp": "bt_private",
    "blood_sugar": "bs_private",
    "heart_rate": "hr_private",
}


def health_demo_registry() -> ConditionRegistry:
    """Registry for the health tracker example: bit 0 bt_private, bit 1 bs_private, bit 2 hr_private."""
    return ConditionRegistry(
        PrivateCondition(bit_position=bit, name=name)
        for bit, name in enumerate(HEALTH_ATTRIBUTE_CONDITIONS.values())
    )
