"""Exception hierarchy shared by every module of the package."""


class DmpjfrftError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DmpjfrftError, ValueError):
    """Invalid user configuration or input files."""


class ShapeMismatch(DmpjfrftError, ValueError):
    pass


class DimensionMismatch(ShapeMismatch):
    pass


class NonDivisibleDimensions(ShapeMismatch):
    pass


class TooFewPoints(DmpjfrftError, ValueError):
    pass


class TooFewSamples(DmpjfrftError, ValueError):
    pass


class TooSmall(DmpjfrftError, ValueError):
    pass


class NumericalError(DmpjfrftError, ArithmeticError):
    """Base class for failures caused by the numbers rather than the inputs' layout."""


class IsolatedVertex(NumericalError):
    pass


class Defective(NumericalError):
    """Matrix is not (numerically) diagonalizable."""


class ZeroEigenvalue(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class SingularBlock(NumericalError):
    pass


class NonDifferentiablePoint(NumericalError):
    pass


class DivergedLoss(NumericalError):
    pass


class ZeroReference(NumericalError):
    pass
