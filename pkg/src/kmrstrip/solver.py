"""The map phi(theta, alpha) = (h, a) and its numerical inverse.

The inverse is found by seeding from a cached coarse grid and running a
damped Newton iteration with a finite-difference Jacobian. Newton works in
the unconstrained variables ``s = logit(2 theta / pi)`` and ``alpha``, with
``alpha`` taken modulo pi: the surfaces at ``alpha = -pi/2`` and
``alpha = pi/2`` coincide and ``phi`` is continuous across that seam once
``a`` is read modulo 1.
"""

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, InfeasibleStripError, NonConvergenceError
from .graph import MarkedStrip, strip_of_params
from .weierstrass import SurfaceParams, normalize_alpha

DEFAULT_TOL = 1e-6
FD_STEP = 1e-5
MAX_ITER = 50
SEED_SHAPE = (16, 16)
THETA_SEED_RANGE = (1e-4, 1.56)
# Newton keeps iterating below tol so that (theta, alpha) is also recovered.
INNER_TOL_FACTOR = 1e-6
N_SEED_TRIALS = 4


def phi(theta, alpha):
    """Strip ``(h, a)`` solved by the surface ``M(theta, alpha, pi/2)``.

    Examples
    --------
    >>> h, a = phi(math.pi / 3, math.pi / 2)
    >>> abs(a) < 1e-9
    True
    """
    strip = strip_of_params(SurfaceParams(theta, alpha))
    return strip.h, strip.a


def wrap_unit(x):
    """Representative of ``x`` modulo 1 in [-1/2, 1/2)."""
    return x - math.floor(x + 0.5)


def wrap_alpha(alpha):
    """Representative of ``alpha`` modulo pi in (-pi/2, pi/2]."""
    r = alpha - math.pi * math.floor(alpha / math.pi + 0.5)
    return normalize_alpha(r if r > -math.pi / 2 else math.pi / 2)


def theta_of_s(s):
    return 0.5 * math.pi / (1.0 + math.exp(-s))


def s_of_theta(theta):
    x = 2.0 * theta / math.pi
    return math.log(x / (1.0 - x))


def strip_residual(value, target):
    """Residual ``(h - h*, a - a*)`` with the ``a`` difference taken modulo 1."""
    return np.array([value[0] - target[0], wrap_unit(value[1] - target[1])])


@dataclass
class ParameterDomain:
    """The parameter rectangle with a lazily built grid of ``phi`` values.

    The grid is built once under a lock and is then only read. Rows are
    ``theta`` (log-spaced, since ``h`` diverges as ``theta -> 0``) and
    columns ``alpha`` (uniform on the circle (-pi/2, pi/2]).
    """

    shape: tuple = SEED_SHAPE
    theta_range: tuple = THETA_SEED_RANGE
    _grid: tuple = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    @staticmethod
    def contains(theta, alpha):
        return 0.0 < theta < math.pi / 2 and -math.pi / 2 < alpha <= math.pi / 2

    def axes(self):
        nt, na = self.shape
        thetas = np.geomspace(*self.theta_range, nt)
        alphas = -0.5 * math.pi + math.pi * (np.arange(na) + 1) / na
        return thetas, alphas

    def grid(self):
        """Arrays ``(thetas, alphas, values)`` with ``values[i, j] = phi(thetas[i], alphas[j])``."""
        if self._grid is None:
            with self._lock:
                if self._grid is None:
                    thetas, alphas = self.axes()
                    values = np.array([[phi(t, a) for a in alphas] for t in thetas])
                    for arr in (thetas, alphas, values):
                        arr.setflags(write=False)
                    self._grid = (thetas, alphas, values)
        return self._grid

    def seeds(self, h, a, k=N_SEED_TRIALS):
        """The ``k`` grid nodes whose strips are nearest to ``(h, a)``."""
        thetas, alphas, values = self.grid()
        dh = np.log(values[..., 0] / h)
        da = values[..., 1] - a
        da -= np.floor(da + 0.5)
        dist = (dh ** 2 + da ** 2).ravel()
        order = np.argsort(dist, kind="stable")[:k]
        return [(float(thetas[i // self.shape[1]]), float(alphas[i % self.shape[1]]))
                for i in order]


_DEFAULT_DOMAIN = ParameterDomain()


def default_domain():
    return _DEFAULT_DOMAIN


@dataclass(frozen=True)
class SolveResult:
    """Outcome of :func:`solve_strip`; ``residual`` is the max-norm strip mismatch."""

    theta: float
    alpha: float
    residual: float
    iterations: int
    converged: bool
    h: float = math.nan
    a: float = math.nan

    def as_dict(self):
        return {"theta": self.theta, "alpha": self.alpha, "h": self.h, "a": self.a,
                "residual": self.residual, "iterations": self.iterations,
                "converged": self.converged}


def _eval(x):
    theta, alpha = theta_of_s(x[0]), wrap_alpha(x[1])
    return theta, alpha, phi(theta, alpha)


def _newton(target, theta0, alpha0, tol, max_iter, step):
    inner = tol * INNER_TOL_FACTOR
    x = np.array([s_of_theta(theta0), alpha0])
    theta, alpha, val = _eval(x)
    r = strip_residual(val, target)
    norm = float(np.abs(r).max())
    best = (norm, theta, alpha, val, 0)
    it = 0
    while it < max_iter and norm > inner:
        it += 1
        jac = np.empty((2, 2))
        for k in range(2):
            xk = x.copy()
            xk[k] += step
            jac[:, k] = strip_residual(_eval(xk)[2], val) / step
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            break
        # keep a single step from jumping across the whole domain
        scale = max(1.0, float(np.abs(dx).max()) / 1.0)
        dx /= scale
        damping = 1.0
        while True:
            xn = x + damping * dx
            xn[0] = min(max(xn[0], -25.0), 25.0)
            try:
                tn, an, vn = _eval(xn)
                rn = strip_residual(vn, target)
                nn = float(np.abs(rn).max())
            except DomainError:
                nn = math.inf
            if nn < norm or damping < 1e-4:
                break
            damping *= 0.5
        if not nn < norm:
            break
        x = np.array([xn[0], an])
        theta, alpha, val, r, norm = tn, an, vn, rn, nn
        if norm < best[0]:
            best = (norm, theta, alpha, val, it)
    return best, it


def solve_strip(h, a, tol=DEFAULT_TOL, domain=None, max_iter=MAX_ITER, step=FD_STEP):
    """Find ``(theta, alpha)`` whose surface solves the Jenkins-Serrin problem on ``S(h, a)``.

    Parameters
    ----------
    h, a : float
        Strip half-width and offset, ``a`` in (-1/2, 1/2].
    tol : float
        Max-norm tolerance on ``phi(theta, alpha) - (h, a)`` (``a`` modulo 1).

    Returns
    -------
    SolveResult

    Raises
    ------
    InfeasibleStripError
        If ``a^2 + h^2 <= 1/4``.
    NonConvergenceError
        If no seed converges; ``best`` holds the best iterate.
    """
    strip = MarkedStrip(h, a)
    if not strip.feasible:
        raise InfeasibleStripError(
            f"strip h={strip.h:.9g}, a={strip.a:.9g} is infeasible: "
            f"a^2 + h^2 = {strip.a ** 2 + strip.h ** 2:.9g} must exceed 1/4")
    domain = _DEFAULT_DOMAIN if domain is None else domain
    target = (strip.h, strip.a)
    best, total = None, 0
    for theta0, alpha0 in domain.seeds(*target):
        cand, it = _newton(target, theta0, alpha0, tol, max_iter, step)
        total += it
        if best is None or cand[0] < best[0]:
            best = cand
        if best[0] <= tol:
            break
    norm, theta, alpha, val, _ = best
    result = SolveResult(theta=theta, alpha=alpha, residual=norm, iterations=total,
                         converged=norm <= tol, h=float(val[0]), a=float(val[1]))
    if not result.converged:
        raise NonConvergenceError(
            f"no solution within tol={tol:g} for h={strip.h:.9g}, a={strip.a:.9g}; "
            f"best residual {norm:.3g} at theta={theta:.9g}, alpha={alpha:.9g}", best=result)
    return result
