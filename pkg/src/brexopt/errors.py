"""Exception types shared across the package."""


class BrexoptError(Exception):
    """Base class for all library errors."""


class DomainError(BrexoptError, ValueError):
    """An argument left the domain of a data term or generating function."""


class ConvergenceError(BrexoptError, RuntimeError):
    """An iterative routine (bisection, Newton, Halley) failed to converge."""


class CalibrationError(BrexoptError, ValueError):
    """No curvature threshold exists for the requested fidelity/generator pair."""


class EnumerationLimitError(BrexoptError, ValueError):
    """Support enumeration would exceed the combinatorial guard."""
