"""Exception hierarchy shared by every bo2d module."""


class Bo2dError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(Bo2dError, ValueError):
    """Input data or parameters are outside the documented domain."""


class NumericalFailure(Bo2dError, ArithmeticError):
    """A computation produced non-finite values."""


class NonHermitianInput(ValidationError):
    pass


class NegativePowerOnNonzeroMean(ValidationError):
    """A negative power of |kx| was requested for data with a nonzero kx=0 row."""


class NonFiniteState(NumericalFailure):
    """The evolving state blew up (or dt is too large for the data)."""


class NonUniformSeries(ValidationError):
    pass


class OffLatticeFrequency(ValidationError):
    pass


class TimesNotOnGrid(ValidationError):
    pass


class EdgeMassError(ValidationError):
    """A line function does not decay at the window edges."""


class InvalidOrders(ValidationError):
    pass


class ThetaOutOfRange(ValidationError):
    pass


class BOutOfRange(ValidationError):
    pass


class LatticeTooLarge(ValidationError):
    pass


class BadICParams(ValidationError):
    pass


class CheckpointFormatError(ValidationError):
    pass


class ConfigError(ValidationError):
    """Configuration text could not be turned into a RunConfig.

    ``key`` names the offending key (or None for syntax errors).
    """

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class MissingKey(ConfigError):
    def __init__(self, keys):
        keys = list(keys)
        super().__init__("missing required key(s): " + ", ".join(keys), key=keys[0] if keys else None)
        self.keys = keys


class RangeError(ConfigError):
    pass
