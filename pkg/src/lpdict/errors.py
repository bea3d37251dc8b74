"""Exception types raised across the package."""


class LpDictError(Exception):
    """Base class for all package errors."""


class InvalidParamError(LpDictError, ValueError):
    """A scalar parameter is outside its admissible range."""


class InvalidShapeError(InvalidParamError):
    """Requested matrix dimensions are not admissible (e.g. m > n)."""


class ShapeMismatchError(LpDictError, ValueError):
    """Operands have incompatible shapes."""


class NonFiniteError(LpDictError, ValueError):
    """Input contains NaN or Inf."""


class ZeroGradientError(LpDictError, ArithmeticError):
    """The ascent direction vanished identically, so no polar step exists."""


class EngineMismatchError(LpDictError, ValueError):
    """The expectation engine cannot evaluate the requested query."""


class NotOrthonormalError(LpDictError, ValueError):
    """A matrix expected to have orthonormal rows does not."""


class TooLargeError(LpDictError, ValueError):
    """Exhaustive evaluation requested beyond its size cap."""
