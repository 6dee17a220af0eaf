"""Exception types raised across the package."""

import numpy as np


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation (negative time, bad size, ...)."""


class SingularityError(np.linalg.LinAlgError):
    """``lambda - A`` is numerically singular."""

    def __init__(self, lam, cond):
        self.lam = lam
        self.cond = cond
        super().__init__(
            f"lambda = {lam!r} is (numerically) in the spectrum: condition estimate {cond:.3e}"
        )


class DivergenceError(ValueError):
    """A Laplace integral was requested at or below the growth bound."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap. ``best`` holds the best value found."""

    def __init__(self, message, best):
        self.best = best
        super().__init__(f"{message} (best value so far: {best!r})")


class PairingError(ValueError):
    """Two elements are paired whose spaces do not share a weight vector."""


class PositivityError(ValueError):
    """A generator expected to be Metzler has a negative off-diagonal entry."""


class DominationError(ValueError):
    """A delay kernel density exceeds its dominating density."""


class PrecisionError(RuntimeError):
    """A quadrature error estimate is too large to support a verdict."""


class HypothesisError(RuntimeError):
    """A precondition of a check (invariance, extra assumption, ...) is not verified."""


class InapplicableError(ValueError):
    """The check does not apply to this scenario."""
