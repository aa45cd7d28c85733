import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from kmrstrip.estimator import StripMap
from kmrstrip.solver import phi


@pytest.fixture(scope="module")
def fitted():
    return StripMap().fit()


def test_params_and_clone():
    m = StripMap(tol=1e-8, seed_shape=(8, 8))
    p = m.get_params()
    assert p == {"tol": 1e-8, "seed_shape": (8, 8), "theta_range": (1e-4, 1.56)}
    c = clone(m)
    assert c.get_params() == p and c is not m


def test_fit_returns_self(fitted):
    m = StripMap(seed_shape=(4, 4))
    assert m.fit() is m
    assert m.n_features_in_ == 2
    assert m.domain_.grid()[2].shape == (4, 4, 2)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        StripMap().transform([[1.0, 0.7]])
    with pytest.raises(NotFittedError):
        StripMap().inverse_transform([[0.4, 0.35]])


def test_transform(fitted):
    X = np.array([[1.0, 0.7], [0.4, -0.3]])
    Y = fitted.transform(X)
    assert Y.shape == (2, 2)
    assert tuple(Y[0]) == phi(1.0, 0.7)


def test_round_trip(fitted):
    X = np.array([[1.0, 0.7], [0.4, -0.3], [1.3, 1.2]])
    back = fitted.inverse_transform(fitted.transform(X))
    assert np.abs(back - X).max() < 1e-6


def test_fit_transform(fitted):
    X = [[0.9, 0.2]]
    assert np.array_equal(StripMap(seed_shape=(4, 4)).fit_transform(X), fitted.transform(X))


def test_column_checks(fitted):
    with pytest.raises(ValueError):
        fitted.transform([[1.0, 0.7, 0.0]])
    with pytest.raises(ValueError):
        fitted.inverse_transform([[0.4]])
    with pytest.raises(ValueError):
        fitted.transform([[np.nan, 0.7]])
