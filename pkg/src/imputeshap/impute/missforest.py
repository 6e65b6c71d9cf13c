"""Iterative random-forest imputation.

Start from column means.  Each sweep visits incomplete columns in ascending
missing count; for each, a forest is trained on the rows where the column is
observed (features: all other columns at their current values) and its
missing cells are re-predicted in place.  After a sweep the sum of squared
changes against the previous sweep is compared with the previous sweep's;
the first increase stops the loop and the previous sweep is returned.
"""

from dataclasses import dataclass

import numpy as np

from ..model import ForestModel, fit_forest
from ..rng import stream
from .simple import column_means, fill_means

DEFAULTS = {"n_trees": 50, "max_depth": 8, "max_sweeps": 10, "min_samples_leaf": 1, "max_features": None}


def validate(hp):
    if hp["n_trees"] < 1 or hp["max_depth"] < 1 or hp["max_sweeps"] < 1 or hp["min_samples_leaf"] < 1:
        raise ValueError(f"invalid missForest hyperparameters {hp}")


@dataclass(frozen=True, eq=False)
class MissForestState:
    means: np.ndarray
    visit_order: tuple[int, ...]
    forests: tuple[ForestModel, ...]
    max_sweeps: int


def _others(p, j):
    return np.r_[0:j, j + 1:p]


def _forest(Xf, rows, j, hp, rng):
    p = Xf.shape[1]
    return fit_forest(Xf[rows][:, _others(p, j)], Xf[rows, j], rng, n_trees=hp["n_trees"],
                      max_depth=hp["max_depth"], min_samples_leaf=hp["min_samples_leaf"],
                      max_features=hp["max_features"])


def _iterate(Xf, mask, columns, max_sweeps, forest_for):
    """Run sweeps; ``forest_for(sweep, j, X)`` supplies the model for column j."""
    p = Xf.shape[1]
    live = mask.any(axis=1)
    prev_X, prev_diff, prev_forests = Xf, np.inf, {}
    trace = []
    converged = False
    for sweep in range(max_sweeps):
        X_new = prev_X.copy()
        forests = {}
        for j in columns:
            rows = ~mask[:, j] & live
            if not rows.any():
                continue
            forests[j] = forest_for(sweep, j, X_new)
            X_new[rows, j] = forests[j].predict(X_new[rows][:, _others(p, j)])
        diff = float(((X_new - prev_X) ** 2).sum())
        trace.append(diff)
        if diff > prev_diff:
            converged = True
            break
        prev_X, prev_diff, prev_forests = X_new, diff, forests
        if diff == 0.0:
            converged = True
            break
    return prev_X, prev_forests, trace, converged


def fit(X, mask, hp, seed):
    n, p = X.shape
    means = column_means(X, mask)
    Xf = fill_means(X, mask, means)
    missing = (~mask).sum(axis=0)
    order = tuple(int(j) for j in np.argsort(missing, kind="stable"))
    incomplete = [j for j in order if missing[j]]

    def train(sweep, j, X_cur):
        return _forest(X_cur, mask[:, j], j, hp, stream(seed, "missforest", sweep, j))

    Xf, forests, trace, converged = _iterate(Xf, mask, incomplete, hp["max_sweeps"] if incomplete else 0, train)
    converged = converged or not incomplete
    final = []
    for j in range(p):
        if j not in forests:
            forests[j] = _forest(Xf, np.ones(n, dtype=bool), j, hp, stream(seed, "missforest", "final", j))
        final.append(forests[j])
    state = MissForestState(means, order, tuple(final), hp["max_sweeps"])
    return state, Xf, {"iterations": len(trace), "trace": trace, "converged": converged}


def transform(state: MissForestState, X, mask):
    Xf = fill_means(X, mask, state.means)
    missing = (~mask).sum(axis=0)
    columns = [j for j in state.visit_order if missing[j]]
    Xf, _, trace, converged = _iterate(Xf, mask, columns, state.max_sweeps if columns else 0,
                                       lambda sweep, j, X_cur: state.forests[j])
    return Xf, {"iterations": len(trace), "trace": trace, "converged": converged or not columns}
