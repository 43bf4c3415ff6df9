"""Exception types shared across the package."""


class SketchSaddleError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(SketchSaddleError, ValueError):
    """Array shapes are inconsistent with the declared problem sizes."""


class UnsupportedProblemError(SketchSaddleError, ValueError):
    """The requested operation is not available for this objective kind."""


class BudgetExceededError(SketchSaddleError, ValueError):
    """An enumeration or size budget was exceeded; a cheaper mode exists."""


class ConfigError(SketchSaddleError, ValueError):
    """A configuration file or argument set is malformed."""
