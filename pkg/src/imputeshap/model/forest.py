"""Random-forest regressor on the shared tree builder (used by missForest)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tree import TreeArrays, _Builder, column_order, grow, max_nodes


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: TreeArrays

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.trees.predict(X) / self.trees.n_trees


def fit_forest(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, n_trees: int = 50,
               max_depth: int = 8, min_samples_leaf: int = 1, max_features: int | None = None) -> ForestModel:
    """Bootstrap-aggregated trees; each node searches ``max_features``
    (default ``floor(sqrt(p))``) randomly chosen features."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    k = max_features or max(1, math.isqrt(p))
    k = min(k, p)
    order = column_order(X)
    builder = _Builder()
    cap = max_nodes(max_depth, n)
    for _ in range(n_trees):
        w = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
        keys = rng.random((cap, p)) if k < p else None
        grow(builder, X, order, y, w, max_depth=max_depth, min_leaf=min_samples_leaf, keys=keys,
             n_candidates=k)
    return ForestModel(builder.arrays())
