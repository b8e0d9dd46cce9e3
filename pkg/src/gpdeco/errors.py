"""Exception types shared across the package."""


class GPError(Exception):
    """Base class for all package errors."""


class DomainError(GPError, ValueError):
    """An argument lies outside the domain of an operation."""


class RegimeError(DomainError):
    """A closed-form prediction was requested outside its regime of validity."""


class QuadratureError(GPError, ArithmeticError):
    """Adaptive quadrature exhausted its refinement budget."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved abs. error {achieved:.3e})")
        self.achieved = achieved


class GaugeError(GPError):
    """The eigenvector gauge cannot be fixed (degeneracy at a path endpoint)."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time!r}")
        self.time = time


class UndefinedPhaseError(GPError, ArithmeticError):
    """The geometric-phase sum vanished, so its argument is undefined."""


class ConvergenceError(GPError, ArithmeticError):
    """Grid refinement did not reach the requested tolerance."""


class FitError(GPError, ValueError):
    """A decay-rate fit window violated its data-quality preconditions."""


class ConfigError(GPError, ValueError):
    """Invalid run configuration (parse or validation failure)."""
