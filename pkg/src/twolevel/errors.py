"""Exception hierarchy.

Each class carries an ``exit_code`` used by the command-line front end.
"""


class TwoLevelError(Exception):
    category = "error"
    exit_code = 1


class ConfigError(TwoLevelError, ValueError):
    """Malformed field spec, config file, or off-contract parameters."""

    category = "config"
    exit_code = 2


class DomainError(TwoLevelError, ValueError):
    """Input outside the mathematical domain (e.g. a non-unit Bloch vector)."""

    category = "config"
    exit_code = 2


class NumericError(TwoLevelError, ArithmeticError):
    category = "numeric"
    exit_code = 3


class AccuracyError(NumericError):
    """Step refinement failed to reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DegenerateFitError(NumericError):
    pass


class ResonanceError(NumericError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BracketError(NumericError):
    pass


class OutputError(TwoLevelError, OSError):
    category = "io"
    exit_code = 4
