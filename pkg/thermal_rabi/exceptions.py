class ThermalRabiError(Exception):
    """
    Base class for every error raised by `thermal_rabi`
    """


class DomainError(ThermalRabiError, ValueError):
    """
    An argument lies outside the domain of the operation
    """


class ResourceError(ThermalRabiError):
    """
    A computation would exceed a configured resource cap
    """


class NumericError(ThermalRabiError, ArithmeticError):
    """
    A numerical routine did not converge or produced an unusable value
    """


class FitError(NumericError):
    pass


class NoMaximumError(FitError):
    pass


class UnderConstrainedError(FitError):
    pass


class CalibrationRejectedError(FitError):
    pass


class ConfigError(ThermalRabiError):
    """
    Invalid run configuration. `errors` maps field names to messages.
    """

    def __init__(self, message, errors=None):
        self.errors = errors or {}
        super(ConfigError, self).__init__(message)


class TraceFormatError(ConfigError):

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = 'line %d: %s' % (line, message)
        super(TraceFormatError, self).__init__(message, {'trace': [message]})


class LambDickeWarning(UserWarning):
    pass


class EnvelopeFlatWarning(UserWarning):
    pass


class CalibrationRangeWarning(UserWarning):
    pass
