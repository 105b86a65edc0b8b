"""Exception hierarchy shared by every module.

Contract violations subclass :class:`ValueError` so that callers used to
numpy/scipy conventions can keep catching that.  Numerical failures subclass
:class:`ArithmeticError`.
"""


class MutualConeError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(MutualConeError, ValueError):
    """An input violates a documented precondition."""


class DataError(ContractError):
    """Ingested data is malformed (bad header, negative value, ...)."""


class ConfigurationError(ContractError):
    """A run configuration cannot be satisfied (e.g. a CV fold lacks a class)."""


class PersistenceError(MutualConeError):
    """A saved model file cannot be read back."""


class VersionError(PersistenceError):
    pass


class ChecksumError(PersistenceError):
    pass


class SchemaError(PersistenceError):
    pass


class NumericalError(MutualConeError, ArithmeticError):
    """Base class for numerical failures."""


class DecompositionError(NumericalError):
    pass


class DefinitenessError(NumericalError):
    """The right-hand matrix of a generalized eigenproblem is not positive definite."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap.

    Attributes
    ----------
    best : object
        Best iterate reached before giving up.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateProjectionError(NumericalError):
    """Every direction vanished under a projection."""


class ClassificationError(NumericalError):
    """A query could not be scored against the references."""
