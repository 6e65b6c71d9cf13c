from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularFitError(np.linalg.LinAlgError):
    """Normal equations are singular and no ridge was requested."""


class MissingInputError(ValueError):
    """A model that needs complete rows was given a missing entry."""


@dataclass(frozen=True, eq=False)
class LinearModel:
    intercept: float
    coefficients: np.ndarray
    feature_means: np.ndarray

    accepts_missing = False
    n_outputs = 1

    @property
    def p(self) -> int:
        return self.coefficients.shape[0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if np.isnan(X).any():
            raise MissingInputError("linear models need complete rows; impute first")
        return self.intercept + X @ self.coefficients

    def to_dict(self) -> dict:
        return {
            "kind": "linear",
            "intercept": float(self.intercept),
            "coefficients": [float(c) for c in self.coefficients],
            "feature_means": [float(m) for m in self.feature_means],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(float(d["intercept"]), np.asarray(d["coefficients"], dtype=np.float64),
                   np.asarray(d["feature_means"], dtype=np.float64))


def fit_linear(X: np.ndarray, y: np.ndarray, ridge: float = 0.0) -> LinearModel:
    """Least squares with an unpenalized intercept.

    Solved on centered data, so for one feature the slope is exactly
    ``sum(xc * yc) / sum(xc ** 2)``, i.e. Cov(x, y) / Var(x).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0 and X.size == 0:
        X = X.reshape(len(y), 0)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if n == 0:
        raise ValueError("cannot fit on zero rows")
    if np.isnan(X).any():
        raise MissingInputError("fit_linear needs a complete design matrix")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    if p == 0:
        return LinearModel(float(y_mean), np.zeros(0), x_mean)
    Xc = X - x_mean
    yc = y - y_mean
    gram = Xc.T @ Xc
    if ridge == 0.0 and (n <= p or np.linalg.matrix_rank(Xc) < p):
        raise SingularFitError("singular normal equations; pass ridge > 0")
    if ridge:
        gram = gram + ridge * np.eye(p)
    beta = np.linalg.solve(gram, Xc.T @ yc)
    return LinearModel(float(y_mean - x_mean @ beta), beta, x_mean)
