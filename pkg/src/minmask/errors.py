"""Exception hierarchy for the Min Mask Sketch workbench."""

from __future__ import annotations


class MinMaskError(ValueError):
    """Base class for every domain error raised by the workbench."""


class ParameterError(MinMaskError):
    """A sizing parameter or mask value is outside its legal range."""


class CapacityError(MinMaskError):
    """A mask sets bits the 64-bit cell width cannot represent."""


class UsageError(MinMaskError):
    """An operation was called with input it is not defined for."""


class SketchFormatError(MinMaskError):
    """A serialized sketch could not be decoded."""


class BadMagicError(SketchFormatError):
    """The payload does not start with the sketch magic bytes."""


class UnsupportedVersionError(SketchFormatError):
    """The payload declares a format version this reader does not know."""


class TruncatedSketchError(SketchFormatError):
    """The payload ends before the header or cell grid is complete."""


class DimensionMismatchError(SketchFormatError):
    """Stored width/depth disagree with the dimensions recomputed from epsilon and confidence."""


class RegistryError(MinMaskError):
    """A condition registry definition is inconsistent or incomplete."""


class UnknownConditionError(MinMaskError):
    """A mask sets a bit that no registered condition owns."""

    def __init__(self, bits: list[int]) -> None:
        self.bits = bits
        listed = ", ".join(str(bit) for bit in bits)
        super().__init__(f"Mask sets bit(s) with no registered condition: {listed}")


class OrderingError(MinMaskError):
    """A log entry timestamp does not strictly follow the previous one."""


class ParseError(MinMaskError):
    """A line of a text input file is malformed."""

    def __init__(self, message: str, *, line: int, source: str | None = None) -> None:
        self.line = line
        self.source = source
        where = f"{source}:{line}" if source else f"line {line}"
        super().__init__(f"{where}: {message}")
