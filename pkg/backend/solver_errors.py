"""
Exception hierarchy for the solver suite.

Two roots decide the command-line exit code: anything deriving from ValidationError is an input
problem (exit 2), anything deriving from NumericalError is a failure of the numerics (exit 3).
"""
from typing import Optional


class ValidationError(ValueError):
    """Invalid input: bad grid, bad parameters, infeasible constraint, malformed file."""


class NumericalError(RuntimeError):
    """The computation itself failed: non-finite values, lost resolution, non-convergence."""


class GridError(ValidationError):
    pass


class ConfigError(ValidationError):
    """
    Configuration problem tied to a line of the config text.

    Args:
        message: Description of the violated rule.
        line: 1-based line number, or None when the problem is not tied to a line.
        key: The offending key, if any.
    """

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        location = f"line {line}: " if line is not None else ""
        super().__init__(f"⚠️ {location}{message}")


class SnapshotFormatError(ValidationError):
    pass


class NonFiniteFieldError(NumericalError):
    pass


class ComponentError(NumericalError):
    """A single energy component evaluated to NaN or Inf."""

    def __init__(self, component: str, value: float):
        self.component = component
        super().__init__(f"⚠️ Energy component '{component}' is not finite ({value}).")


class ZeroMassError(NumericalError):
    pass


class TailLeakError(NumericalError):
    pass


class ResolutionError(NumericalError):
    pass


class EscapedBallError(NumericalError):
    pass


class PathTearError(NumericalError):
    pass


class CollapsedToMinimizerError(NumericalError):
    pass


class BracketError(NumericalError):
    pass
