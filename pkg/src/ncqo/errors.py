"""Exception hierarchy shared by all ncqo modules."""


class NcqoError(Exception):
    """Base class for every error raised by the library."""


class DomainError(NcqoError, ValueError):
    """A time expression was evaluated outside its domain.

    Carries the offending time ``t`` and, for square roots, the negative
    radicand value.
    """

    def __init__(self, message, t=None, value=None):
        super().__init__(message)
        self.t = t
        self.value = value


class OutsidePhysicalWindow(NcqoError):
    def __init__(self, message, t=None, radicand=None):
        super().__init__(message)
        self.t = t
        self.radicand = radicand


class NonconvergentIntegral(NcqoError):
    pass


class NoConvergence(NcqoError):
    pass


class ConstraintViolated(NcqoError):
    def __init__(self, message, relation="", residual=float("nan")):
        super().__init__(message)
        self.relation = relation
        self.residual = residual


class InvalidParameter(NcqoError, ValueError):
    pass


class SignConstraintViolated(NcqoError):
    pass


class InconsistentTriple(NcqoError):
    def __init__(self, message, theta=float("nan"), omega=float("nan"),
                 residual=float("nan")):
        super().__init__(message)
        self.theta = theta
        self.omega = omega
        self.residual = residual


class SingularEP(NcqoError):
    pass


class ChielliniInapplicable(NcqoError):
    pass


class UnsupportedCase(NcqoError):
    pass


class ComplexPhase(NcqoError):
    pass


class ImaginaryEffectiveFrequency(NcqoError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class PeriodicityViolated(NcqoError):
    pass


class ParseError(NcqoError):
    def __init__(self, message, key=""):
        super().__init__(message)
        self.key = key


class UnknownFigure(NcqoError):
    pass


class InvalidC(InvalidParameter):
    """The exponential family's integration constant must exceed 1."""


class InvalidK(InvalidParameter):
    """The rational family's exponent k must be nonzero."""
