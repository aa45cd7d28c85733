"""scikit-learn style wrapper around the strip map."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .solver import DEFAULT_TOL, SEED_SHAPE, THETA_SEED_RANGE, ParameterDomain, phi, solve_strip


class StripMap(TransformerMixin, BaseEstimator):
    """The map ``(theta, alpha) -> (h, a)`` and its inverse.

    ``fit`` builds the seed grid used by the inverse; ``transform`` maps
    rows ``(theta, alpha)`` to strips ``(h, a)``; ``inverse_transform``
    solves for the surface of each strip.

    Parameters
    ----------
    tol : float
        Tolerance of :func:`kmrstrip.solver.solve_strip`.
    seed_shape : (int, int)
        Size of the seed grid in ``theta`` and ``alpha``.
    theta_range : (float, float)
        Smallest and largest seed ``theta`` (log-spaced).

    Examples
    --------
    >>> m = StripMap().fit()
    >>> Y = m.transform([[1.0, 0.7]])
    >>> np.allclose(m.inverse_transform(Y), [[1.0, 0.7]], atol=1e-6)
    True
    """

    def __init__(self, tol=DEFAULT_TOL, seed_shape=SEED_SHAPE, theta_range=THETA_SEED_RANGE):
        self.tol = tol
        self.seed_shape = seed_shape
        self.theta_range = theta_range

    def fit(self, X=None, y=None):
        """Build the seed grid; ``X`` and ``y`` are ignored."""
        domain = ParameterDomain(tuple(self.seed_shape), tuple(self.theta_range))
        domain.grid()
        self.domain_ = domain
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        """Rows ``(theta, alpha)`` to rows ``(h, a)``."""
        check_is_fitted(self, "domain_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"expected 2 columns (theta, alpha), got {X.shape[1]}")
        return np.array([phi(t, a) for t, a in X]).reshape(-1, 2)

    def inverse_transform(self, Y):
        """Rows ``(h, a)`` to rows ``(theta, alpha)``."""
        check_is_fitted(self, "domain_")
        Y = check_array(Y, dtype=float)
        if Y.shape[1] != 2:
            raise ValueError(f"expected 2 columns (h, a), got {Y.shape[1]}")
        out = []
        for h, a in Y:
            r = solve_strip(h, a, tol=self.tol, domain=self.domain_)
            out.append((r.theta, r.alpha))
        return np.array(out).reshape(-1, 2)
