"""Exception hierarchy shared by every fuzzquant module."""

from typing import Optional


class FuzzquantError(Exception):
    """Root of every error raised by fuzzquant.

    `stage` is filled in by the segmentation pipeline so callers can tell a
    pupil finder failure from a limbic boundary failure.
    """

    def __init__(self, message: str = "", *, stage: Optional[str] = None) -> None:
        super().__init__(message)
        self.stage = stage

    @property
    def category(self) -> Optional[str]:
        if self.stage is None:
            return None
        return "pupil" if self.stage == "pupil" else "limbic"


# signals and quantization

class SignalError(FuzzquantError):
    pass


class EmptySignal(SignalError):
    pass


class NonFiniteValue(SignalError):
    pass


class DegenerateK(SignalError):
    pass


class ConvergenceError(SignalError):
    pass


class LengthMismatch(SignalError):
    pass


class InvalidSymbols(SignalError):
    pass


class DegenerateCentroids(SignalError):
    pass


# raster files

class RasterError(FuzzquantError):
    pass


class UnsupportedFormat(RasterError):
    pass


class CorruptData(RasterError):
    pass


class CircleOutOfBounds(RasterError):
    pass


# polar mapping

class PolarError(FuzzquantError):
    pass


class DiscOutOfBounds(PolarError):
    pass


class ZeroRadius(PolarError):
    pass


class DimensionMismatch(PolarError):
    pass


class EmptyRow(PolarError):
    pass


class InvalidPosition(PolarError):
    pass


class InvalidWidth(PolarError):
    pass


# segmentation

class PupilNotFound(FuzzquantError):
    pass


class NoIrisBand(FuzzquantError):
    pass


class RowCountMismatch(FuzzquantError):
    pass


class InvalidSpec(FuzzquantError):
    pass
