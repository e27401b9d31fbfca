"""
异常定义
Exception hierarchy shared by all services
"""


class AqecError(Exception):
    """Base class for workbench errors"""


class InvalidArgumentError(AqecError, ValueError):
    """Inputs violate a documented precondition"""


class CapacityError(AqecError, RuntimeError):
    """Dense representation would exceed the configured qubit limit"""


class OutOfDomainError(AqecError, ValueError):
    """A bound was evaluated outside the range where it is defined"""


class ConfigError(AqecError):
    """Experiment configuration could not be parsed or validated"""
