"""Ridge regression through the normal equations.

The intercept is a column of ones in the design matrix and is left out of
the penalty:

    (AᵀA + λ·P) β = Aᵀy,   A = [1 | X],   P = diag(0, 1, ..., 1)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import as_matrix, as_vector, check_same_length
from ..errors import ConfigError, DimensionMismatch, SingularSystem


def fit_ridge(X, y, lam: float = 1.0, fit_intercept: bool = True) -> np.ndarray:
    """Return ``[intercept, w_1, ..., w_d]``.

    With ``fit_intercept=False`` the intercept slot is 0 and the problem is
    the plain penalised least squares ``(XᵀX + λI) w = Xᵀy``.
    """
    X = as_matrix(X)
    y = as_vector(y)
    check_same_length(X, y, ("X", "y"))
    if lam < 0 or not np.isfinite(lam):
        raise ConfigError("lambda must be a finite value >= 0")
    n, d = X.shape
    p = d + 1 if fit_intercept else d
    if lam == 0 and p > n:
        raise SingularSystem(f"lambda=0 with {p} unknowns and only {n} samples")

    A = np.hstack([np.ones((n, 1)), X]) if fit_intercept else X
    penalty = np.full(p, float(lam))
    if fit_intercept:
        penalty[0] = 0.0
    lhs = A.T @ A + np.diag(penalty)
    rhs = A.T @ y
    if lam == 0 and np.linalg.matrix_rank(A) < p:
        raise SingularSystem("design matrix is rank deficient and lambda=0")
    try:
        beta = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    return beta if fit_intercept else np.concatenate([[0.0], beta])


class RidgeRegressor(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_ridge`.

    Parameters
    ----------
    alpha : float
        L2 penalty on the coefficients (never on the intercept).
    fit_intercept : bool
        Whether to fit an unpenalised intercept.
    """

    def __init__(self, alpha: float = 1.0, fit_intercept: bool = True):
        self.alpha = alpha
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        X = as_matrix(X)
        beta = fit_ridge(X, y, self.alpha, self.fit_intercept)
        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X @ self.coef_ + self.intercept_
