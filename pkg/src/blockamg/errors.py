"""Exception hierarchy shared by all solver components."""


class AmgError(Exception):
    """Base class for every error raised by blockamg."""


class DimensionMismatch(AmgError, ValueError):
    pass


class NotDivisible(AmgError, ValueError):
    pass


class NonSquare(AmgError, ValueError):
    pass


class SingularBlock(AmgError, ArithmeticError):
    pass


class SingularPivot(AmgError, ArithmeticError):
    pass


class MissingDiagonal(AmgError, ValueError):
    pass


class ZeroDiagonal(AmgError, ArithmeticError):
    pass


class BadNullspaceShape(AmgError, ValueError):
    pass


class BreakdownNonSPD(AmgError, ArithmeticError):
    """CG found p^T A p <= 0: the matrix or the preconditioner is not SPD."""


class InvalidMaterial(AmgError, ValueError):
    pass


class ShapeMismatch(AmgError, ValueError):
    pass


class ParseError(AmgError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedField(ParseError):
    pass
