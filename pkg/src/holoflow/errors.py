"""Exception hierarchy shared by all holoflow modules."""


class HoloflowError(Exception):
    pass


class InvalidInput(HoloflowError, ValueError):
    pass


class InvalidMetric(HoloflowError, ValueError):
    pass


class PreconditionViolated(HoloflowError, ValueError):
    pass


class UnsupportedOrder(HoloflowError, NotImplementedError):
    pass


class Unsupported(HoloflowError, NotImplementedError):
    pass


class InvalidState(HoloflowError, ValueError):
    pass


class AccuracyError(HoloflowError, ArithmeticError):
    """Discretization too coarse for the requested symmetry tolerance."""


class IntegrationAccuracyError(AccuracyError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class GaugeError(AccuracyError):
    pass


class ConfigError(HoloflowError, ValueError):
    pass


class FlowSingularity(HoloflowError, ArithmeticError):
    def __init__(self, message, t):
        super().__init__(f"{message} (t={t:.6g})")
        self.t = t
