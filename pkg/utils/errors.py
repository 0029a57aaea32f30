"""
Exception hierarchy for the AoI toolkit.
Scripts and the API catch AoiToolkitError; everything else is a bug.
"""


class AoiToolkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(AoiToolkitError, ValueError):
    """Invalid configuration value, unknown config key, or dimension mismatch."""


class DomainError(AoiToolkitError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NumericDomainError(DomainError):
    """Numeric argument (e.g. a variance) outside its admissible range."""


class DivergenceError(AoiToolkitError, ArithmeticError):
    """AMP produced non-finite values."""

    def __init__(self, iteration: int, message: str = None):
        self.iteration = iteration
        super().__init__(message or f"AMP diverged at iteration {iteration} (non-finite values)")


class TruncationError(AoiToolkitError, ArithmeticError):
    """Algorithm 1 horizon cap reached before the requested tail tolerance."""

    def __init__(self, tail_mass: float, horizon: int, tail_tol: float):
        self.tail_mass = tail_mass
        self.horizon = horizon
        self.tail_tol = tail_tol
        super().__init__(
            f"AoI tail mass {tail_mass:.3e} after {horizon} rows exceeds tail_tol {tail_tol:.3e}"
        )


class ConvergenceError(AoiToolkitError, ArithmeticError):
    """Power iteration did not settle within its iteration cap."""

    def __init__(self, last_diff: float, rounds: int):
        self.last_diff = last_diff
        self.rounds = rounds
        super().__init__(f"Power iteration not converged after {rounds} rounds (last diff {last_diff:.3e})")
