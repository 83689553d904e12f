"""Exception hierarchy shared by every leafwater module.

Validation problems derive from :class:`LeafWaterError` (a ``ValueError``);
file-system problems derive from :class:`IoFailure` (an ``OSError``). The CLI
maps the first family to exit code 1 and the second to exit code 2.
"""

from __future__ import annotations


class LeafWaterError(ValueError):
    """Base class for input/contract violations."""

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


class IoFailure(OSError):
    """A file could not be read or written."""


# spectral_io
class MissingColumn(LeafWaterError):
    pass


class NonMonotonicAxis(LeafWaterError):
    pass


class MalformedValue(LeafWaterError):
    pass


class NoBandInTolerance(LeafWaterError):
    pass


class UnsupportedDataType(LeafWaterError):
    pass


class SizeMismatch(LeafWaterError):
    pass


class MissingWavelengths(LeafWaterError):
    pass


# indices
class DegenerateDenominator(LeafWaterError):
    pass


# learners
class EmptyInput(LeafWaterError):
    pass


class NonFiniteTarget(LeafWaterError):
    pass


class NonFiniteFeature(LeafWaterError):
    pass


class ConstantFeature(LeafWaterError):
    pass


class SingularInput(LeafWaterError):
    pass


class DimensionMismatch(LeafWaterError):
    pass


class SchemaVersionMismatch(LeafWaterError):
    pass


class CorruptPayload(LeafWaterError):
    pass


# evaluation / mapper / synthgen
class LengthMismatch(LeafWaterError):
    pass


class ZeroVariance(LeafWaterError):
    pass


class InsufficientData(LeafWaterError):
    pass


class GridMismatch(LeafWaterError):
    pass


class InvalidConfig(LeafWaterError):
    pass
