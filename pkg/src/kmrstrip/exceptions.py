"""Exception hierarchy shared by all modules."""


class KMRError(Exception):
    """Base class for every error raised by kmrstrip."""


class DomainError(KMRError, ValueError):
    """A parameter lies outside its admissible open domain."""


class QuadratureError(KMRError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance.

    The achieved error estimate is kept in ``achieved``.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class BranchProximityError(KMRError, ValueError):
    """A transport path passes too close to a branch point or a pole of z."""


class SingularPointError(KMRError, ValueError):
    """Evaluation at, or integration through, an end of the surface."""


class ConfigurationError(KMRError, ValueError):
    """Inconsistent numerical configuration (resolution, loop radius, ...)."""


class InfeasibleStripError(KMRError, ValueError):
    """The marked strip violates a^2 + h^2 > 1/4."""


class InternalInconsistencyError(KMRError, RuntimeError):
    """A computed quantity contradicts a proven property of the family."""


class NonConvergenceError(KMRError, RuntimeError):
    """An iterative solver stopped without meeting its tolerance.

    ``best`` carries the best iterate found (a ``SolveResult``).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
