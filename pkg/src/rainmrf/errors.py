"""Exception and warning types raised across the package."""


class RainMRFError(Exception):
    """Base class for all package errors."""


class UsageError(RainMRFError):
    """Bad input, configuration or contract violation (CLI exit code 2)."""


class NumericalFailure(RainMRFError):
    """Runtime numerical failure (CLI exit code 1)."""


class DuplicateLocation(UsageError):
    pass


class NonLatticeCoordinate(UsageError):
    pass


class InvalidLocation(UsageError):
    pass


class IncompleteGrid(UsageError):
    pass


class ParseError(UsageError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidValue(UsageError):
    pass


class IncompleteSeries(UsageError):
    pass


class ConflictingBlocks(UsageError):
    pass


class InsufficientYears(UsageError):
    pass


class InvalidParameter(UsageError):
    pass


class InvalidScheme(UsageError):
    pass


class NotApplicable(UsageError):
    pass


class InsufficientSamples(UsageError):
    pass


class TooLarge(UsageError):
    pass


class ShapeError(UsageError):
    pass


class DegenerateEmission(NumericalFailure):
    pass


class NumericalError(NumericalFailure):
    pass


class DegenerateClimatology(NumericalFailure):
    pass


class DegenerateThreshold(UserWarning):
    """A threshold collapsed onto the mean because the series has no spread."""


class DegenerateSeries(UserWarning):
    """A location series has zero variance."""


class WeakModel(UserWarning):
    """All coherence terms are disabled."""
