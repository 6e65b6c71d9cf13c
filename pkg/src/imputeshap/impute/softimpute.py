"""Matrix completion by iterated singular-value soft-thresholding.

    Z <- S_lam(P_obs(X) + P_miss(Z))

where ``S_lam`` subtracts ``lam`` from every singular value (clamped at 0)
and optionally keeps only the top ``max_rank``.  Each step cannot increase
``0.5 * ||P_obs(X - Z)||_F^2 + lam * ||Z||_*``; the objective of every
iterate is recorded in the diagnostics trace.
"""

from dataclasses import dataclass

import numpy as np

from .simple import column_means, fill_means

DEFAULTS = {"shrinkage_value": None, "shrinkage_ratio": 0.1, "max_rank": None, "tol": 1e-5, "max_iters": 200}


def validate(hp):
    if hp["shrinkage_value"] is not None and hp["shrinkage_value"] < 0:
        raise ValueError("shrinkage_value must be >= 0")
    if hp["max_rank"] is not None and hp["max_rank"] < 1:
        raise ValueError("max_rank must be >= 1")
    if hp["tol"] <= 0 or hp["max_iters"] < 1:
        raise ValueError(f"invalid SOFT-IMPUTE hyperparameters {hp}")


@dataclass(frozen=True, eq=False)
class SoftImputeState:
    means: np.ndarray
    train_values: np.ndarray
    train_mask: np.ndarray
    train_Z: np.ndarray
    lam: float
    max_rank: int | None
    tol: float
    max_iters: int


def svd_threshold(A, lam, max_rank=None):
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    s = np.maximum(s - lam, 0.0)
    if max_rank is not None:
        s[max_rank:] = 0.0
    return (U * s) @ Vt, s


def objective(X, mask, Z, lam, singular_values):
    r = np.where(mask, X - Z, 0.0)
    return 0.5 * float((r * r).sum()) + lam * float(singular_values.sum())


def complete(X, mask, Z, lam, max_rank, tol, max_iters):
    Xobs = np.where(mask, X, 0.0)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        Z_new, s = svd_threshold(np.where(mask, Xobs, Z), lam, max_rank)
        trace.append(objective(Xobs, mask, Z_new, lam, s))
        delta = float(((Z_new - Z) ** 2).sum())
        scale = float((Z * Z).sum())
        Z = Z_new
        if delta <= tol * max(scale, np.finfo(float).tiny):
            converged = True
            break
    return Z, {"iterations": it, "trace": trace, "converged": converged}


def _marginal_rows(X, mask, Z, means):
    empty = ~mask.any(axis=1)
    if empty.any():
        Z = Z.copy()
        Z[empty] = means
    return Z


def fit(X, mask, hp, seed):
    means = column_means(X, mask)
    Z0 = fill_means(X, mask, means)
    lam = hp["shrinkage_value"]
    if lam is None:
        lam = hp["shrinkage_ratio"] * float(np.linalg.svd(Z0, compute_uv=False)[0])
    Z, diag = complete(X, mask, Z0, lam, hp["max_rank"], hp["tol"], hp["max_iters"])
    diag["lam"] = lam
    filled = _marginal_rows(X, mask, np.where(mask, X, Z), means)
    state = SoftImputeState(means, np.where(mask, X, 0.0), mask.copy(), Z, lam, hp["max_rank"],
                            hp["tol"], hp["max_iters"])
    return state, filled, diag


def transform(state: SoftImputeState, X, mask):
    if mask.all():
        return X.copy(), {"iterations": 0, "trace": [], "converged": True}
    n_train = state.train_values.shape[0]
    stacked = np.vstack([state.train_values, np.where(mask, X, 0.0)])
    stacked_mask = np.vstack([state.train_mask, mask])
    Z0 = np.vstack([state.train_Z, fill_means(X, mask, state.means)])
    Z, diag = complete(stacked, stacked_mask, Z0, state.lam, state.max_rank, state.tol, state.max_iters)
    Zt = Z[n_train:]
    return _marginal_rows(X, mask, np.where(mask, X, Zt), state.means), diag
