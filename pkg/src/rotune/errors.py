"""Exception hierarchy shared by every rotune module."""


class RotuneError(Exception):
    """Base class for all errors raised by rotune."""


class ModelDomainError(RotuneError, ValueError):
    """Operating point lies outside the validity range of the device model."""


class SupplyRangeError(RotuneError, ValueError):
    """Voltage is outside the supported supply range."""


class MeasurementOverflowError(RotuneError):
    """A 16-bit RO counter wrapped during a measurement window."""


class ConfigError(RotuneError, ValueError):
    """Invalid or unreadable configuration."""


class InfeasibleError(RotuneError):
    """No supply voltage within limits satisfies the requested frequency."""


class DataError(RotuneError, ValueError):
    """Input data is empty or degenerate for the requested fit."""
