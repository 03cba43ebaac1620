"""Exception hierarchy shared by every module of the package."""


class RabiGatesError(Exception):
    """Base class for all errors raised by rabigates."""


class InvalidDimensionError(RabiGatesError, ValueError):
    pass


class NumericError(RabiGatesError, ArithmeticError):
    pass


class CompositionError(RabiGatesError, ValueError):
    """Operands live on incompatible Hilbert spaces."""


class OutOfRangeError(RabiGatesError, IndexError):
    pass


class InvalidOrderError(RabiGatesError, ValueError):
    """Photon order too large for the truncated space."""


class DegenerateProjectionError(RabiGatesError):
    pass


class DegenerateSuperpositionError(RabiGatesError):
    pass


class UnknownGateError(RabiGatesError, ValueError):
    pass


class LeakageError(RabiGatesError):
    """Too much population sits in the top Fock levels of the truncation."""


class TrotterRegimeError(RabiGatesError, ValueError):
    pass


class LambDickeError(RabiGatesError, ValueError):
    pass


class IntegrationError(RabiGatesError):
    """Base class for integrator failures."""


class NormDriftError(IntegrationError):
    pass


class StepUnderflowError(IntegrationError):
    pass


class TraceDriftError(IntegrationError):
    pass


class IntegratorAccuracyError(IntegrationError):
    pass


class GridError(RabiGatesError):
    """Phase-space grid too small or too coarse for the state."""


class BracketError(RabiGatesError, ValueError):
    pass


class UsageError(RabiGatesError, ValueError):
    pass


class ConfigError(RabiGatesError, ValueError):
    pass
