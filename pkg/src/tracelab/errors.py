"""Exception types shared across the package."""


class TraceLabError(Exception):
    """Base class for all package-specific errors."""


class LengthGuardError(TraceLabError):
    """Input string longer than an exact-computation guard allows."""


class ShapeMismatchError(TraceLabError):
    """Two objects that must share (n, k, p) or a domain do not."""


class InvalidKError(TraceLabError):
    """Window width k out of range for the given string or family."""


class InvalidAError(TraceLabError):
    """Affine ellipse parameter a outside (0, 1/8]."""


class InvalidLError(TraceLabError):
    """Family scale L is not a perfect cube or is too small."""


class SizeGuardError(TraceLabError):
    """Exact scan requested on a family too large for it."""


class DomainMismatchError(TraceLabError):
    """Sample outcome not present in a distribution's domain."""


class EmptyFamilyError(TraceLabError):
    """Operation requires at least one candidate distribution."""


class EmptyTraceSetError(TraceLabError):
    """Operation requires at least one trace."""


class BoundViolationError(TraceLabError):
    """A checked inequality failed; signals an implementation bug."""


class CoefficientBoundError(TraceLabError):
    """Polynomial coefficients violate a precondition bound."""


class ConfigParseError(TraceLabError):
    """Malformed line or unknown key in a config file."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
