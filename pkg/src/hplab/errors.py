"""Exception hierarchy shared by the numerical modules and the CLI."""


class HplabError(Exception):
    """Base class for every error raised by hplab."""


class ValidationError(HplabError, ValueError):
    """Bad user input: parameters, flags, config files."""


class DomainError(ValidationError):
    """Argument outside the domain of a special function."""


class NumericalError(HplabError, ArithmeticError):
    """A computation failed for numerical reasons (CLI exit code 2)."""


class BesselOverflowError(NumericalError, OverflowError):
    """Y_n(x) is not representable as a finite double."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested accuracy."""


class SingularSystemError(NumericalError):
    """The assembled Galerkin matrix is numerically singular."""


class DegenerateDenominatorError(NumericalError):
    """A ratio was requested whose denominator is (numerically) zero."""


class GramError(NumericalError):
    """A Gram matrix that should be Hermitian positive definite is not."""


class EllipticityError(NumericalError):
    """A Fourier symbol fails the ellipticity lower bound on the support."""


class SymbolBoundError(NumericalError):
    """A Fourier symbol exceeds its declared bound on the frequency grid."""


class GridError(ValidationError):
    """A spectral grid violates padding or Nyquist requirements."""
