"""Exception hierarchy.

Errors split into two families so the command line can map them to exit
codes: ``ValidationError`` (bad input, exit 2) and ``SolverError``
(a numerical or physical failure at run time, exit 3).
"""


class UnidynError(Exception):
    """Base class for all package errors."""


class ValidationError(UnidynError, ValueError):
    """Input violates a documented precondition."""


class ParameterError(ValidationError):
    """Physical parameters are out of range for the requested operation."""


class SolverError(UnidynError, ArithmeticError):
    """A computation could not be completed."""


class SingularTiltError(SolverError):
    """Tilt angle is inside the guard band around the horizontal wheel."""

    def __init__(self, theta, limit):
        super().__init__(
            f"tilt angle {theta!r} rad is within the singular band |theta| >= {limit!r} rad "
            "(horizontal wheel, cos(theta) -> 0)"
        )
        self.theta = theta
        self.limit = limit


class SteadyStateError(SolverError):
    """No steady state exists (or it is excluded) at the requested point."""


class ZeroYawRateError(SteadyStateError):
    pass


class ExcludedYawRateError(SteadyStateError):
    pass


class NegativeRadicandError(SteadyStateError):
    pass


class DomainError(SteadyStateError):
    pass


class ResidualError(SteadyStateError):
    """Supplied steady state does not satisfy its defining equations."""


class SingularMatrixError(SolverError):
    pass


class ConvergenceError(SolverError):
    pass


class UncontrollableError(SolverError):
    pass


class SimulationAbort(SolverError):
    """Integration stopped early; carries the last valid sample."""

    def __init__(self, message, t_last, x_last):
        super().__init__(f"{message} (last valid t = {t_last:.6g} s)")
        self.t_last = t_last
        self.x_last = x_last
