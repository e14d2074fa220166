"""Exception hierarchy for qtruss."""


class QTrussError(Exception):
    """Base class for all package errors."""


class MissingVariable(QTrussError, KeyError):
    pass


class EmptyPolynomial(QTrussError, ValueError):
    pass


class UnknownProblem(QTrussError, KeyError):
    pass


class ParseError(QTrussError, ValueError):
    pass


class ValidationError(QTrussError, ValueError):
    pass


class LengthMismatch(QTrussError, ValueError):
    pass


class InvalidAssignment(QTrussError, ValueError):
    pass


class SingularStiffness(QTrussError, ArithmeticError):
    pass


class ZeroLength(QTrussError, ValueError):
    pass


class NoFreeDof(QTrussError, ValueError):
    pass


class ZeroDeterminant(QTrussError, ArithmeticError):
    pass


class SingularPoint(QTrussError, ZeroDivisionError):
    """A denominator vanished at a point where it should not."""


class TooManyVariables(QTrussError, ValueError):
    pass


class SamplerFailure(QTrussError, RuntimeError):
    pass


class AllIterationsInvalid(QTrussError, RuntimeError):
    """No iteration of the fractional solve produced a valid sample."""
