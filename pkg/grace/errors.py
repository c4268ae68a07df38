"""
Exception types shared by every GRACE component
"""


class GraceError(Exception):
    """Base class for all errors raised by the package"""

    exit_code = 1


class InputError(GraceError):
    """Malformed input data, out-of-range ids or non-conforming shapes"""

    exit_code = 2


class ParameterError(GraceError):
    """A numeric parameter outside its admissible range"""

    exit_code = 2


class ConfigError(GraceError):
    """Configuration file that cannot be read or fails validation"""

    exit_code = 2


class NumericalError(GraceError):
    """NaN/Inf values, singular systems or divergence during training"""

    exit_code = 3


class StateError(GraceError):
    """Operation invoked in the wrong phase (e.g. co-training without a target)"""

    exit_code = 1
