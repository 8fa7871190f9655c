"""Exception types shared across the package."""


class FrobeniusLikeError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(FrobeniusLikeError, ValueError):
    pass


class InputError(FrobeniusLikeError, ValueError):
    pass


class SingularityError(FrobeniusLikeError, ArithmeticError):
    """A determinant or linear form vanished where it must not.

    ``witness`` carries whatever identifies the degeneracy: the vanishing
    determinant, the index tuple of a discriminant form, ...
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class UnsupportedModeError(FrobeniusLikeError):
    pass


class ParameterError(FrobeniusLikeError, ValueError):
    pass


class QuadratureError(FrobeniusLikeError, ArithmeticError):
    pass


class ConfigError(FrobeniusLikeError, ValueError):
    """Raised for malformed configuration documents.

    ``field`` names the offending entry (dotted path), ``line`` is set for
    JSON syntax errors.
    """

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line

    def __str__(self):
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field is not None:
            where.append(f"field {self.field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        return prefix + super().__str__()
