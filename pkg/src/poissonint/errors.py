"""Exception hierarchy shared by every module."""


class PoissonIntError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(PoissonIntError, ValueError):
    pass


class NonFiniteValue(PoissonIntError, FloatingPointError):
    pass


class DomainExit(PoissonIntError):
    """A flow left the region where the model (or scalar ODE) is defined."""


class QuadratureFailure(PoissonIntError):
    pass


class DegenerateStructure(PoissonIntError):
    """The structure matrix is undefined (e.g. det K(Z) ~ 0 for the gyrocenter)."""


class DegenerateSubflow(PoissonIntError):
    pass


class NonMonotone(PoissonIntError):
    """An implicit subflow equation is not invertible for the given coefficients."""


class NonConvergence(PoissonIntError):
    def __init__(self, iterations, residual, message=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message or f"Newton iteration did not converge after {iterations} "
                         f"iterations (residual {residual:.3e})")


class BlowUp(PoissonIntError):
    """A scalar subflow has a finite escape time shorter than the requested time."""

    def __init__(self, escape_time, message=None):
        self.escape_time = escape_time
        super().__init__(message or f"solution escapes to infinity at t={escape_time!r}")


class IntegrationAborted(PoissonIntError):
    """Raised by ``integrate`` with the index of the step that failed."""

    def __init__(self, step, cause):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")


class GridMismatch(PoissonIntError, ValueError):
    pass


class ZeroInitialEnergy(PoissonIntError, ZeroDivisionError):
    pass


class DegenerateFit(PoissonIntError):
    pass


class ConfigError(PoissonIntError, ValueError):
    pass


class TimingConflict(PoissonIntError, RuntimeError):
    """Timing was requested while a parallel sweep is running."""


class ReferenceGateFailure(PoissonIntError):
    """Two references at different refinements disagree; error numbers would be meaningless."""

    def __init__(self, discrepancy, tolerance, message=None):
        self.discrepancy = discrepancy
        self.tolerance = tolerance
        super().__init__(message or f"reference self-consistency gate failed: discrepancy "
                         f"{discrepancy:.3e} > {tolerance:.1e}")
