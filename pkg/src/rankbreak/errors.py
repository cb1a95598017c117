"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs violate a documented invariant or precondition."""


class ParseError(ValidationError):
    """Raised on malformed input files; carries file/line context in the message."""


class EstimationInfeasibleError(RuntimeError):
    """Raised when the requested fit has no usable data (e.g. no comparisons)."""
