"""Exception hierarchy for qsllab."""


class QslError(Exception):
    """Base class for all library errors."""


class DimensionError(QslError, ValueError):
    pass


class DegenerateDecompositionError(QslError):
    """Raised when an operator has (numerically) zero variance on a state."""


class GapCollisionError(QslError):
    """Two instantaneous levels came closer than the allowed gap."""

    def __init__(self, message, time=None, levels=None):
        super().__init__(message)
        self.time = time
        self.levels = levels


class ConvergenceError(QslError):
    pass


class NormDriftError(QslError):
    """Integrator lost unitarity beyond tolerance; use more steps."""


class ContractError(QslError):
    pass


class UnderflowError(QslError):
    pass


class ConfigError(QslError, ValueError):
    pass


class BoundViolation(QslError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or []
