"""Exception hierarchy shared by all modules."""


class MisoError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MisoError, ValueError):
    """Argument outside the mathematical domain of a function."""


class SingularParameterError(DomainError):
    """rho == 1 reached a formula that is only defined for rho < 1."""


class DegenerateFeedbackError(MisoError, ValueError):
    """Feedback vector with zero norm (probability-zero event)."""


class ConfigError(MisoError, ValueError):
    """Inconsistent configuration object."""


class RangeError(MisoError, ValueError):
    """Not enough data inside a requested window."""


class BracketError(MisoError, ValueError):
    """Root bracket without a sign change."""

    def __init__(self, msg, lo=None, hi=None, f_lo=None, f_hi=None):
        super().__init__(msg)
        self.lo, self.hi, self.f_lo, self.f_hi = lo, hi, f_lo, f_hi


class EvaluationError(MisoError, ArithmeticError):
    """Integrand or objective returned a non-finite value."""

    def __init__(self, msg, abscissa=None):
        super().__init__(msg)
        self.abscissa = abscissa


class ConvergenceError(MisoError, ArithmeticError):
    """Iterative method did not reach its tolerance."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class NotFoundError(MisoError, LookupError):
    """Search finished without finding the requested point."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class SolverError(MisoError, RuntimeError):
    """Optimization solver failed; ``trace`` holds the iterates."""

    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


class DegeneratePolicyError(MisoError, ValueError):
    """Power policy with an empty support (p = 0 everywhere)."""
