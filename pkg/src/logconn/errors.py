"""Exception hierarchy.

Every numerical refusal derives from :class:`NumericalRefusal`, so callers
(and the CLI) can tell "cannot decide at this tolerance" apart from bad input.
"""


class LogConnError(Exception):
    """Base class for all errors raised by this package."""


class NumericalRefusal(LogConnError):
    """The computation declined to guess at the requested tolerance."""


class NonFinite(LogConnError, ValueError):
    pass


class ClusterAmbiguity(NumericalRefusal):
    """Eigenvalues (or weights) fall in the band where no stable clustering exists."""


class NotUnipotent(LogConnError, ValueError):
    pass


class NotSemisimple(LogConnError, ValueError):
    pass


class NotRealSemisimple(NotSemisimple):
    pass


class Singular(LogConnError, ValueError):
    pass


class NotInParabolic(LogConnError, ValueError):
    pass


class PathThroughSingularity(LogConnError, ValueError):
    pass


class StepFailure(NumericalRefusal):
    pass


class ResonantObstruction(LogConnError):
    """The gauge recursion hit a resonant order whose right side is not in the image."""

    def __init__(self, order, residual):
        super().__init__(
            f"resonant obstruction at order {order} (cokernel residual {residual:.3e})"
        )
        self.order = order
        self.residual = residual


class TruncationFailure(NumericalRefusal):
    pass


class ValidationFailure(LogConnError, ValueError):
    """A monodromy datum failed one of its compatibility conditions."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class WeightLeak(NumericalRefusal):
    pass


class DegenerateGeometry(LogConnError, ValueError):
    pass


class CompatibilitySearchFailure(LogConnError):
    pass


class ParseError(LogConnError, ValueError):
    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column
