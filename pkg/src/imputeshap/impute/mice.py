"""Single-chain chained-equations imputation with ridge regressions.

Columns are visited in ascending order of missing count.  Within a sweep
each incomplete column in turn gets a ridge regression on all other columns
(current completion, so earlier columns' updates from the same sweep are
used), fit over the rows where that column is observed, and its missing
cells are re-predicted.  The chain stops when the largest absolute change
of any imputed cell drops below ``tol``.  Rows with no observed entry keep the column means.

New rows are completed by replaying the recorded sequence of per-sweep
models from the mean start, so transforming the training table reproduces
the fitted imputation exactly.
"""

from dataclasses import dataclass

import numpy as np

from ..model import LinearModel, fit_linear
from .simple import column_means, fill_means

DEFAULTS = {"tol": 1e-4, "max_sweeps": 20, "ridge": 1e-3}


def validate(hp):
    if hp["tol"] <= 0 or hp["max_sweeps"] < 1 or hp["ridge"] < 0:
        raise ValueError(f"invalid MICE hyperparameters {hp}")


@dataclass(frozen=True, eq=False)
class MiceState:
    means: np.ndarray
    visit_order: tuple[int, ...]
    sweeps: tuple[tuple[LinearModel | None, ...], ...]


def _others(p, j):
    return np.r_[0:j, j + 1:p]


def _sweep(Xf, mask, columns, models, live):
    change = 0.0
    p = Xf.shape[1]
    for j in columns:
        rows = ~mask[:, j] & live
        if not rows.any():
            continue
        pred = models[j].predict(Xf[rows][:, _others(p, j)])
        change = max(change, float(np.abs(pred - Xf[rows, j]).max()))
        Xf[rows, j] = pred
    return change


def fit(X, mask, hp, seed):
    n, p = X.shape
    means = column_means(X, mask)
    Xf = fill_means(X, mask, means)
    missing = (~mask).sum(axis=0)
    order = tuple(int(j) for j in np.argsort(missing, kind="stable"))
    incomplete = [j for j in order if missing[j]]
    live = mask.any(axis=1)
    sweeps = []
    trace = []
    converged = not incomplete
    for _ in range(hp["max_sweeps"] if incomplete else 0):
        models: list = [None] * p
        change = 0.0
        for j in incomplete:
            # refit on the current completion, including this sweep's updates
            obs = mask[:, j]
            models[j] = fit_linear(Xf[obs][:, _others(p, j)], Xf[obs, j], ridge=hp["ridge"])
            change = max(change, _sweep(Xf, mask, [j], models, live))
        trace.append(change)
        sweeps.append(models)
        if trace[-1] < hp["tol"]:
            converged = True
            break
    # columns complete in training still need a model for new rows
    if not sweeps:
        sweeps = [[None] * p]
    for j in range(p):
        if not missing[j]:
            model = fit_linear(Xf[:, _others(p, j)], Xf[:, j], ridge=hp["ridge"])
            for models in sweeps:
                models[j] = model
    state = MiceState(means, order, tuple(tuple(m) for m in sweeps))
    return state, Xf, {"iterations": len(trace), "trace": trace, "converged": converged}


def transform(state: MiceState, X, mask):
    Xf = fill_means(X, mask, state.means)
    missing = (~mask).sum(axis=0)
    columns = [j for j in state.visit_order if missing[j]]
    live = mask.any(axis=1)
    trace = []
    for models in state.sweeps if columns else ():
        trace.append(_sweep(Xf, mask, columns, models, live))
    return Xf, {"iterations": len(trace), "trace": trace}
