"""Exception hierarchy shared by the solver, model and CLI layers."""


class BubblyError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameters(BubblyError, ValueError):
    pass


class ConfigInvalid(BubblyError, ValueError):
    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class SolverError(BubblyError, RuntimeError):
    """Numerical failure (non-convergence, bad bracket, ...)."""


class NoConvergence(SolverError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class SingularJacobian(SolverError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NonFiniteEvaluation(SolverError):
    pass


class NoSignChange(SolverError):
    def __init__(self, message, bracket=None, values=None):
        super().__init__(message)
        self.bracket = bracket
        self.values = values


class NonFiniteSaving(SolverError):
    pass


class PreconditionFailed(SolverError):
    pass


class NoBubblyEquilibrium(SolverError):
    pass


class NotDeterminate(SolverError):
    pass


class ShootingFailed(SolverError):
    def __init__(self, message, bracket=None, values=None):
        super().__init__(message)
        self.bracket = bracket
        self.values = values


class InverseUndefined(SolverError):
    pass


class NoRoot(SolverError):
    def __init__(self, message, probed=None):
        super().__init__(message)
        self.probed = probed


class FocSolveFailed(SolverError):
    pass


class DegenerateConsumption(SolverError):
    pass


class DegenerateWage(SolverError):
    pass


class InfeasiblePortfolio(SolverError):
    pass


class IndeterminatePortfolio(SolverError):
    """Investor is indifferent over an interval of portfolio shares."""

    def __init__(self, message, interval):
        super().__init__(message)
        self.interval = interval


class NotConvergent(SolverError):
    pass


class InvalidInitialPrice(BubblyError, ValueError):
    pass


class OrderViolation(BubblyError, AssertionError):
    pass


class VerificationFailed(BubblyError):
    pass


class UnknownModel(BubblyError, ValueError):
    pass


class ShapeMismatch(BubblyError, ValueError):
    pass


class NecessityViolated(UserWarning):
    """Dividend growth outside the interval that eliminates the fundamental steady state."""
