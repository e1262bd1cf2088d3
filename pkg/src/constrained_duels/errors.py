"""Exception hierarchy shared by all modules.

``ValidationError`` subclasses map to CLI exit code 2, ``Infeasible`` to 3,
anything else derived from ``DuelError`` to 4.
"""


class DuelError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(DuelError, ValueError):
    """Input data or configuration failed a structural check."""


class NotSkewComplement(ValidationError):
    pass


class BadDiagonal(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class NoCondorcetWinner(DuelError):
    pass


class OrderNotCertifying(ValidationError):
    pass


class EpsilonTooLarge(ValidationError):
    pass


class GammaOutOfRange(ValidationError):
    """Default hyperparameters give an exploration rate >= 1 (horizon too short for K)."""


class BadCsv(ValidationError):
    pass


class InconsistentPairCount(ValidationError):
    pass


class SchemaMismatch(ValidationError):
    pass


class ValidationFailure(ValidationError):
    pass


class KindMismatch(ValidationError):
    pass


class Infeasible(DuelError):
    """No point of the simplex (or simplex pair) satisfies the budget constraint."""


class NumericalFailure(DuelError):
    pass


class AlreadyStopped(DuelError):
    pass


class BoundViolation(DuelError, AssertionError):
    """A runtime magnitude bound on an estimated loss was exceeded."""
