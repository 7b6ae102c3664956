"""Exception hierarchy shared by the library and the command line."""


class InputError(ValueError):
    """Malformed or out-of-range input (bad ramification index, context mismatch...)."""


class DomainError(ZeroDivisionError):
    """Operation undefined at this argument, e.g. inverting zero."""


class NotIndependent(ArithmeticError):
    """Vectors that were required to be Q_p-independent are not."""


class DependentBasis(NotIndependent):
    """A supplied basis of series is Q_p-linearly dependent."""


class TruncationTooShallow(ArithmeticError):
    """A truncated series was asked for coefficients beyond its trusted degree."""


class ModeError(ValueError):
    """Operation needs an exact polynomial but got a truncated series."""


class RegionError(ValueError):
    """Evaluation point lies outside the open unit polydisk."""


class SchemaError(ValueError):
    """A JSON document does not match the expected schema.

    ``where`` is a dotted field path such as ``basis[1][0].terms[2].exp``.
    """

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
