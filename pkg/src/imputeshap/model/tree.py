"""Regression trees grown with the shared split kernel, stored as flat arrays."""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .. import _kernels

LEAF = -1


@dataclass(frozen=True, eq=False)
class TreeArrays:
    """One or more trees in flat node arrays.

    Node ``k`` is a leaf when ``feature[k] == -1``.  Otherwise rows with
    ``x[feature[k]] < threshold[k]`` go to ``left[k]``, larger values to
    ``right[k]``, and missing values follow ``default_left[k]``.  ``roots``
    holds the root node of every tree; ``predict`` sums over trees.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    default_left: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    roots: np.ndarray

    @property
    def n_trees(self) -> int:
        return int(self.roots.shape[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.n_trees == 0:
            return np.zeros(np.atleast_2d(X).shape[0])
        return _kernels.predict_ensemble(np.atleast_2d(X), self)

    def tree(self, t: int) -> "TreeArrays":
        """Tree ``t`` alone (node indices unchanged)."""
        return TreeArrays(self.feature, self.threshold, self.left, self.right, self.default_left,
                          self.value, self.gain, self.roots[t:t + 1])

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "default_left": [bool(d) for d in self.default_left],
            "value": [float(v) for v in self.value],
            "gain": [float(g) for g in self.gain],
            "roots": self.roots.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeArrays":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["default_left"], dtype=np.uint8),
            np.asarray(d["value"], dtype=np.float64),
            np.asarray(d["gain"], dtype=np.float64),
            np.asarray(d["roots"], dtype=np.int64),
        )


class _Builder:
    """Accumulates trees into one flat node list."""

    def __init__(self):
        self.parts: list[tuple] = []
        self.size = 0
        self.roots: list[int] = []

    def add(self, feature, threshold, left, right, default_left, value, gain):
        off = self.size
        self.parts.append((feature, threshold, np.where(left >= 0, left + off, LEAF),
                           np.where(right >= 0, right + off, LEAF), default_left, value, gain))
        self.roots.append(off)
        self.size += feature.shape[0]

    def arrays(self) -> TreeArrays:
        if not self.parts:
            empty_i, empty_f = np.zeros(0, dtype=np.int64), np.zeros(0)
            return TreeArrays(empty_i, empty_f, empty_i, empty_i, np.zeros(0, dtype=np.uint8), empty_f,
                              empty_f, empty_i)
        cols = [np.concatenate(c) for c in zip(*self.parts)]
        return TreeArrays(*cols, roots=np.asarray(self.roots, dtype=np.int64))


def column_order(X: np.ndarray) -> np.ndarray:
    """Row order per feature (p x n), NaN last; computed once per design matrix."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)


def max_nodes(max_depth: int, n_rows: int) -> int:
    cap = 2 * n_rows + 1
    if max_depth < 40:
        cap = min(cap, 2 ** (max_depth + 1) - 1)
    return cap


def grow(builder: _Builder, X: np.ndarray, order: np.ndarray, r: np.ndarray, w: np.ndarray, *,
         max_depth: int, min_leaf: float, scale: float = 1.0, keys: np.ndarray | None = None,
         n_candidates: int = 0) -> np.ndarray:
    """Grow one tree on residuals ``r`` with row weights ``w`` and add it to ``builder``.

    Returns the tree's output for every row with positive weight (zero elsewhere).
    """
    *nodes, fitted = _kernels.grow_tree(X, order, r, w, max_depth, min_leaf, scale, keys, n_candidates)
    builder.add(*nodes)
    return fitted
