"""Vectorised adaptive Gauss-Legendre quadrature on straight segments."""

import numpy as np
from numpy.polynomial.legendre import leggauss

from .exceptions import QuadratureError

_NODES, _WEIGHTS = leggauss(16)
_MAX_DEPTH = 40
# bound on simultaneously refined segments; unreachable tolerances stop here
_MAX_ACTIVE = 1 << 18


def _gl(func, a, b):
    """16-point rule on each segment [a_k, b_k] of the complex plane.

    ``func`` maps an array of shape (n, q) to (c, n, q); returns (c, n).
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    pts = mid[:, None] + half[:, None] * _NODES[None, :]
    vals = func(pts)
    return (vals * _WEIGHTS).sum(axis=-1) * half


def integrate_segments(func, a, b, tol=1e-11, max_depth=_MAX_DEPTH):
    """Integrate ``func`` along every straight segment ``a[k] -> b[k]``.

    Parameters
    ----------
    func : callable
        Vectorised integrand. Called with a complex array of shape (n, q),
        it must return an array of shape (c, n, q) (``c`` components).
    a, b : array_like of complex
        Segment endpoints, shape (n,).
    tol : float
        Local absolute tolerance per segment. A segment is bisected until the
        16-point rule on it agrees with the sum over its halves.

    Returns
    -------
    values : ndarray, shape (c, n)
        The integrals.
    error : ndarray, shape (n,)
        Accumulated error estimate per segment.
    """
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    n = a.shape[0]
    if n == 0:
        probe = func(np.zeros((1, 1), dtype=complex))
        return np.zeros((probe.shape[0], 0), dtype=complex), np.zeros(0)

    owner = np.arange(n)
    whole = _gl(func, a, b)
    total = np.zeros((whole.shape[0], n), dtype=complex)
    error = np.zeros(n)
    for depth in range(max_depth + 1):
        mid = 0.5 * (a + b)
        left = _gl(func, a, mid)
        right = _gl(func, mid, b)
        refined = left + right
        diff = np.abs(refined - whole).max(axis=0)
        # scale tolerance by segment share so that splits do not accumulate
        done = diff <= tol
        if np.any(done):
            np.add.at(total, (slice(None), owner[done]), refined[:, done])
            np.add.at(error, owner[done], diff[done])
        todo = ~done
        if not np.any(todo):
            return total, error
        if depth == max_depth or 2 * int(todo.sum()) > max(_MAX_ACTIVE, 4 * n):
            worst = float(diff[todo].max())
            raise QuadratureError(
                f"adaptive Gauss-Legendre did not converge; achieved {worst:.3e} "
                f"> tol {tol:.1e}", achieved=worst)
        owner = np.concatenate([owner[todo], owner[todo]])
        a, b = (np.concatenate([a[todo], mid[todo]]),
                np.concatenate([mid[todo], b[todo]]))
        whole = np.concatenate([left[:, todo], right[:, todo]], axis=1)
    raise AssertionError("unreachable")


def integrate_real(func, a, b, rtol=1e-13):
    """Adaptive Gauss-Legendre for a scalar real integrand on [a, b].

    The absolute tolerance is ``rtol`` times a coarse estimate of the integral.
    """
    def wrapped(x):
        return np.asarray(func(x.real), dtype=float)[None, ...]

    edges = np.linspace(a, b, 65).astype(complex)
    coarse = abs(_gl(wrapped, edges[:-1], edges[1:]).sum())
    ends = np.array([a], complex), np.array([b], complex)
    val, err = integrate_segments(wrapped, *ends, tol=max(rtol * coarse, 1e-300),
                                  max_depth=60)
    return float(val[0, 0].real), float(err[0])
