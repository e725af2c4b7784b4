"""Exception types raised by the numerical routines."""


class JacobiError(Exception):
    """Base class for all errors raised by this package."""


class NonEllipticError(JacobiError, ValueError):
    """The N-step transfer matrix is not elliptic (discriminant not negative)."""

    def __init__(self, message, x=None, index=None):
        super().__init__(message)
        self.x = x
        self.index = index


class DegenerateRefinement(JacobiError, ArithmeticError):
    """A diagonalization refinement step lost its uniform lower bound."""

    def __init__(self, message, level=None, index=None):
        super().__init__(message)
        self.level = level
        self.index = index


class ZeroEntryError(JacobiError, ValueError):
    """The (2, 1) entry of the limit matrix vanishes, so the amplitude is undefined."""


class FitDegenerate(JacobiError, ArithmeticError):
    """Least-squares phase fit has a rank-deficient design matrix."""


class QuadratureError(JacobiError, ArithmeticError):
    """Quadrature error estimate exceeds the requested tolerance."""


class ConfigError(JacobiError, ValueError):
    """Invalid run configuration."""
