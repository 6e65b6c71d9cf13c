"""Conditional-Gaussian imputation with ridge regularization.

The mean vector comes from each column's observed entries and the covariance
from pairwise available cases (population normalization, centered at the
column means).  The covariance is symmetrized and, if it has negative
eigenvalues, projected to the nearest positive semidefinite matrix.  A row's
missing block is filled with

    mu_m + (x_o - mu_o) (S_oo + lam I)^-1 S_om

Rows with nothing observed get ``mu``.
"""

from dataclasses import dataclass

import numpy as np

from .simple import column_means

DEFAULTS = {"lam": 0.1}


def validate(hp):
    if hp["lam"] < 0:
        raise ValueError("DIMV ridge lam must be >= 0")


@dataclass(frozen=True, eq=False)
class DimvState:
    mean: np.ndarray
    cov: np.ndarray
    lam: float


def pairwise_covariance(X, mask, mean):
    Xc = np.where(mask, X - mean, 0.0)
    M = mask.astype(np.float64)
    counts = M.T @ M
    with np.errstate(invalid="ignore", divide="ignore"):
        cov = np.where(counts > 0, (Xc.T @ Xc) / counts, 0.0)
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() < 0:
        cov = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
        cov = 0.5 * (cov + cov.T)
    return cov


def conditional_fill(state: DimvState, X, mask):
    out = np.where(mask, X, state.mean)
    patterns, inverse = np.unique(mask, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    for k, pattern in enumerate(patterns):
        m = ~pattern
        if not m.any() or not pattern.any():
            continue
        rows = inverse == k
        s_oo = state.cov[np.ix_(pattern, pattern)] + state.lam * np.eye(int(pattern.sum()))
        s_om = state.cov[np.ix_(pattern, m)]
        try:
            coef = np.linalg.solve(s_oo, s_om)
        except np.linalg.LinAlgError:
            coef = np.linalg.pinv(s_oo) @ s_om
        resid = X[np.ix_(rows, pattern)] - state.mean[pattern]
        out[np.ix_(rows, m)] = state.mean[m] + resid @ coef
    return out


def fit(X, mask, hp, seed):
    mean = column_means(X, mask)
    state = DimvState(mean, pairwise_covariance(X, mask, mean), float(hp["lam"]))
    return state, conditional_fill(state, X, mask), {}


def transform(state, X, mask):
    return conditional_fill(state, X, mask), {}
