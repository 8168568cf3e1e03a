"""Exception types raised across the toolkit."""


class FramedropError(Exception):
    """Base class for all toolkit errors."""


class InvalidParamsError(FramedropError):
    """A probability or parameter range is outside its valid domain."""


class DegenerateParamsError(FramedropError):
    """The analytic loss fraction is undefined for these parameters."""


class InvalidRatioError(FramedropError):
    """An expansion ratio or rate ratio is not a positive integer."""


class LengthMismatchError(FramedropError):
    """Two sequences that must be index-aligned have different lengths."""


class EmptyMaskError(FramedropError):
    """An operation requires a mask with at least one bit."""


class MaskFormatError(FramedropError):
    """A mask record line could not be parsed.

    Carries the 1-based line number when parsing from a file.
    """

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class DegenerateSeriesError(FramedropError):
    """CCC is undefined: both sequences constant with equal means."""


class ShapeMismatchError(FramedropError):
    """Batched series do not have matching shapes."""


class InvalidDurationError(FramedropError):
    """A segment duration does not align with the label rate."""


class ManifestError(FramedropError):
    """A manifest is structurally invalid or references missing files."""


class TrackError(FramedropError):
    """Track data violates its audio/label alignment invariants."""


class MissingModelError(FramedropError):
    """The model registry lacks an entry required by the setting."""


class PredictorError(FramedropError):
    """An external predictor failed or returned malformed output."""
