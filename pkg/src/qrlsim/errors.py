"""Exception types shared across the package."""


class QrlError(Exception):
    """Base class for all package-specific errors."""


class DegenerateTeleportError(QrlError, ValueError):
    """Measurement-angle pair too close to a divergence of the feedforward matrix."""


class ScheduleOrderError(QrlError, ValueError):
    """Feedforward references a macronode that is not resolved yet."""


class CapacityError(QrlError, ValueError):
    """Compiled schedule does not fit the configured lattice."""


class AdjacencyError(QrlError, ValueError):
    """Two-mode gate operands cannot meet at a single macronode."""


class EstimationSingularityError(QrlError, ValueError):
    """Reference correlation matrix is singular; transformation cannot be estimated."""


class IllConditionedGainError(QrlError, ValueError):
    """Gain requested for an input with (near-)zero mean displacement."""


class MisuseError(QrlError, ValueError):
    """Operation applied to data or roles it is not defined for."""


class ParseError(QrlError, ValueError):
    """Malformed program or schedule text."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
