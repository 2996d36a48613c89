"""Exception types raised by itoquad."""


class NotPSD(ValueError):
    """A covariance matrix has a pivot below the negative tolerance."""


class SingularEvaluation(ArithmeticError):
    """An integrand was evaluated at a point where it is unbounded."""


class MissingDerivative(AttributeError):
    """The integrand does not expose a derivative."""
