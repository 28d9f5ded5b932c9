"""The Min Mask Sketch: a Count-Min grid whose cells accumulate policy bitmasks by OR.

Each key is hashed to one cell per row. Inserting ORs the key's mask into
those cells; querying reads them back and keeps the candidate with the
fewest set bits. Collisions can only add bits, so an estimate always
contains the true mask and errors over-restrict instead of over-sharing.
"""

from __future__ import annotations

import logging
import math
from enum import StrEnum
from functools import reduce
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

from minmask.errors import CapacityError, ParameterError, UsageError
from minmask.hashing import SketchKey, encode_key, row_columns
from minmask.models import CELL_WIDTH_BITS, MASK_LIMIT, QueryEstimate, SketchParams

if TYPE_CHECKING:
    from minmask.policy import ConditionRegistry

logger = logging.getLogger(__name__)

CELL_BYTES: int = CELL_WIDTH_BITS // 8
# Dimensions are stored as u32 in the file header.
MAX_DIMENSION: int = 0xFFFFFFFF


class Estimator(StrEnum):
    """How the per-row candidates are reduced to one answer."""

    MIN = "min"
    INTERSECTION = "intersection"


def compute_dimensions(epsilon: float, confidence: float) -> tuple[int, int]:
    """Return (width, depth) for the given error-bound factor and confidence."""
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not 0 < confidence < 1:
        raise ParameterError(f"confidence must lie in (0, 1), got {confidence!r}")
    columns = math.e / epsilon
    if not math.isfinite(columns) or columns > MAX_DIMENSION:
        raise ParameterError(f"epsilon {epsilon!r} needs more than {MAX_DIMENSION} columns")
    width = math.ceil(columns)
    depth = max(1, math.ceil(math.log(1 / (1 - confidence))))
    return width, depth


def popcount(mask: int) -> int:
    """Number of active conditions in a mask."""
    return mask.bit_count()


def select_min_mask(candidates: list[int]) -> int:
    """Pick the candidate with the fewest set bits; ties go to the smallest value."""
    if not candidates:
        raise UsageError("select_min_mask needs at least one candidate")
    return min(candidates, key=lambda mask: (mask.bit_count(), mask))


def check_mask(mask: int) -> int:
    """Validate that a mask fits an unsigned 64-bit cell."""
    if isinstance(mask, bool) or not isinstance(mask, int):
        raise ParameterError(f"mask must be an integer, got {type(mask).__name__}")
    if mask < 0:
        raise ParameterError(f"mask must be unsigned, got {mask}")
    if mask >= MASK_LIMIT:
        raise CapacityError(f"mask {mask:#x} sets bits above bit {CELL_WIDTH_BITS - 1}")
    return mask


def check_params(params: SketchParams) -> tuple[int, int]:
    """Validate sketch parameters and return the grid dimensions they imply."""
    if params.cell_width_bits != CELL_WIDTH_BITS:
        raise ParameterError(f"cell_width_bits is fixed at {CELL_WIDTH_BITS}, got {params.cell_width_bits}")
    if not 0 <= params.seed < MASK_LIMIT:
        raise ParameterError(f"seed must be an unsigned 64-bit integer, got {params.seed}")
    return compute_dimensions(params.epsilon, params.confidence)


class MinMaskSketch:
    """Fixed-size d x w grid of 64-bit policy masks.

    The sketch is plain data: any number of readers or a single writer may
    use it at once, with exclusion provided by the caller.
    """

    def __init__(
        self,
        params: SketchParams,
        *,
        cells: NDArray[np.uint64] | None = None,
        insert_count: int = 0,
        estimator: Estimator = Estimator.MIN,
        registry: ConditionRegistry | None = None,
    ) -> None:
        width, depth = check_params(params)
        if cells is None:
            cells = np.zeros((depth, width), dtype=np.uint64)
        elif cells.shape != (depth, width) or cells.dtype != np.uint64:
            raise ParameterError(f"cell grid must be {depth}x{width} uint64, got {cells.shape} {cells.dtype}")
        if insert_count < 0:
            raise ParameterError(f"insert_count must be non-negative, got {insert_count}")

        self._params = params
        self._width = width
        self._depth = depth
        self._cells = cells
        self._rows = np.arange(depth)
        self._insert_count = insert_count
        self.estimator = estimator
        self.registry = registry

    @classmethod
    def create(
        cls,
        params: SketchParams | None = None,
        *,
        estimator: Estimator = Estimator.MIN,
        registry: ConditionRegistry | None = None,
    ) -> MinMaskSketch:
        """Create an all-zero sketch sized from epsilon and confidence."""
        sketch = cls(params or SketchParams(), estimator=estimator, registry=registry)
        logger.debug(
            "Created sketch: epsilon=%s confidence=%s width=%d depth=%d",
            sketch.params.epsilon,
            sketch.params.confidence,
            sketch.width,
            sketch.depth,
        )
        return sketch

    @property
    def params(self) -> SketchParams:
        return self._params

    @property
    def width(self) -> int:
        return self._width

    @property
    def depth(self) -> int:
        return self._depth

    @property
    def insert_count(self) -> int:
        """Number of add calls since creation, repeats included."""
        return self._insert_count

    @property
    def cells(self) -> NDArray[np.uint64]:
        """Read-only view of the grid, row-major."""
        view = self._cells.view()
        view.flags.writeable = False
        return view

    def index_row(self, key: SketchKey, row: int) -> int:
        """Column the key maps to in the given row."""
        if not 0 <= row < self._depth:
            raise UsageError(f"row must lie in [0, {self._depth}), got {row}")
        return row_columns(encode_key(key), self._params.seed, self._depth, self._width)[row]

    def cell_indices(self, key: SketchKey) -> list[tuple[int, int]]:
        """All (row, column) cells the key touches."""
        columns = row_columns(encode_key(key), self._params.seed, self._depth, self._width)
        return list(enumerate(columns))

    def add(self, key: SketchKey, mask: int) -> MinMaskSketch:
        """OR the mask into the key's cell in every row.

        Bits can only be added: re-adding a key with a smaller mask leaves the
        previously set bits in place.
        """
        check_mask(mask)
        if self.registry is not None:
            self.registry.validate_mask(mask)
        columns = row_columns(encode_key(key), self._params.seed, self._depth, self._width)
        self._cells[self._rows, columns] |= np.uint64(mask)
        self._insert_count += 1
        return self

    def get_mask(self, key: SketchKey) -> QueryEstimate:
        """Estimate the key's mask from its d cells.

        The estimate is a bitwise superset of everything added under the key.
        A key never added answers 0 unless all of its cells collided.
        """
        columns = row_columns(encode_key(key), self._params.seed, self._depth, self._width)
        candidates = [int(value) for value in self._cells[self._rows, columns]]
        if self.estimator is Estimator.INTERSECTION:
            estimate = reduce(lambda left, right: left & right, candidates)
        else:
            estimate = select_min_mask(candidates)
        return QueryEstimate(estimate=estimate, candidates=candidates)

    def grid_bytes(self) -> int:
        """Bytes held by the cell grid; fixed for the sketch's lifetime."""
        return self._depth * self._width * CELL_BYTES

    def set_bit_total(self) -> int:
        """Total number of set bits across the grid."""
        return sum(int(value).bit_count() for value in self._cells.flat)

    def error_bound(self) -> float:
        """Additive bound epsilon * n for the current number of insertions."""
        return self._params.epsilon * self._insert_count

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MinMaskSketch):
            return NotImplemented
        return (
            self._params == other._params
            and self._insert_count == other._insert_count
            and bool(np.array_equal(self._cells, other._cells))
        )

    def __repr__(self) -> str:
        return (
            f"MinMaskSketch(epsilon={self._params.epsilon}, confidence={self._params.confidence}, "
            f"seed={self._params.seed}, depth={self._depth}, width={self._width}, n={self._insert_count})"
        )
