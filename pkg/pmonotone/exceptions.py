"""Errors raised when an operation is called outside its preconditions."""

from __future__ import annotations

from pmonotone.text import BOLD, RESET


class PMonotoneError(Exception):
    """Base class; the command line turns these into exit code 1."""

    def __init__(self, msg: str) -> None:
        """Initialise with a human-readable message."""
        self.msg = f"{BOLD}{msg}{RESET}"
        super().__init__(self.msg)


class ConfigError(PMonotoneError):
    """Raise if a configuration value is malformed or violates a precondition."""

    def __init__(self, field: str, problem: str, line: int | None = None) -> None:
        """Initialise with offending field, problem and optional source line."""
        self.field = field
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"Invalid config field '{field}'{where}: {problem}")


class ArgumentError(PMonotoneError):
    """Raise if a call passes a combination of arguments that exclude each other."""


class DomainError(PMonotoneError):
    """Raise if an argument lies outside the domain of an operation."""

    def __init__(self, name: str, value: float, bound: str) -> None:
        """Initialise with argument name, value and the violated bound."""
        self.name = name
        self.value = value
        super().__init__(f"{name} = {value!r} violates {bound}")


class HorizonViolationError(PMonotoneError):
    """Raise if a Schwarzschild model is cut inside its horizon."""

    def __init__(self, r_min: float, mass: float) -> None:
        """Initialise with inner radius and mass."""
        super().__init__(
            f"r_min = {r_min!r} lies inside the horizon 2m = {2 * mass!r}"
        )


class ProfileTableError(PMonotoneError):
    """Raise if a tabulated profile cannot define a metric."""


class DivergentTailError(PMonotoneError):
    """Raise if the profile tail does not decay, so capacity integrals diverge."""

    def __init__(self, sigma: float) -> None:
        """Initialise with the tail exponent."""
        super().__init__(
            f"profile tail exponent sigma = {sigma!r} must be positive "
            "for the capacity integral to converge"
        )


class ConvergenceError(PMonotoneError):
    """Raise if an iterative solver stops before reaching its tolerance."""

    def __init__(self, what: str, iterations: int, residual: float) -> None:
        """Initialise with solver name, iteration count and final residual."""
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"{what} did not converge after {iterations} iterations "
            f"(final residual {residual:.3e})"
        )


class MaximumPrincipleError(PMonotoneError):
    """Raise if a converged grid field leaves the range of its boundary data."""

    def __init__(self, low: float, high: float, found: float) -> None:
        """Initialise with admissible range and offending value."""
        super().__init__(
            f"discrete maximum principle violated: value {found!r} "
            f"outside [{low!r}, {high!r}]"
        )


class LevelOutsideGridError(PMonotoneError):
    """Raise if a requested level set does not meet the grid."""

    def __init__(self, level: float, low: float, high: float) -> None:
        """Initialise with the level and the range of grid values."""
        super().__init__(
            f"level {level!r} is outside the interior value range ({low!r}, {high!r})"
        )


class DegenerateContourError(PMonotoneError):
    """Raise if an extracted contour is empty, disconnected or not a sphere."""


class StepTooLargeError(PMonotoneError):
    """Raise if a finite-difference step leaves the asymptotic regime."""

    def __init__(self, h: float, truncation: float, threshold: float) -> None:
        """Initialise with step, estimated truncation error and threshold."""
        super().__init__(
            f"step h = {h!r} too large: estimated truncation error "
            f"{truncation:.3e} exceeds {threshold:.3e}"
        )


class ExtrapolationError(PMonotoneError):
    """Raise if a sequence cannot be extrapolated."""


class IdentityResidualError(PMonotoneError):
    """Raise if a transformed field does not solve its equation."""

    def __init__(self, residual: float, tolerance: float) -> None:
        """Initialise with observed residual and tolerance."""
        self.residual = residual
        super().__init__(
            f"transformed field residual {residual:.3e} exceeds {tolerance:.1e}"
        )


class FormulaPoleError(PMonotoneError):
    """Raise if an exponent hits the pole of a formula."""
