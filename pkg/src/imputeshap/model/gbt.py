"""Gradient-boosted regression trees with learned default directions for
missing values.

Regression boosts squared error from ``base_score = mean(y)``.  Classification
is one-vs-rest: each class gets its own tree sequence boosting the logistic
loss of ``y == k`` from the logit of the class prior, and probabilities are the
softmax over the per-class margins.  Trees are fit to negative gradients with
plain mean-residual leaves (no Newton step).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .tree import TreeArrays, _Builder, column_order, grow


@dataclass(frozen=True)
class GbtParams:
    n_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 0 or self.max_depth < 0 or self.min_samples_leaf < 1:
            raise ValueError(f"invalid GBT parameters: {self}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class GbtModel:
    task: str
    base_score: np.ndarray
    ensembles: tuple[TreeArrays, ...]
    learning_rate: float
    n_features: int
    params: GbtParams = field(default_factory=GbtParams)

    accepts_missing = True

    @property
    def n_outputs(self) -> int:
        return 1 if self.task == "regression" else len(self.ensembles)

    def margins(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return np.stack([b + e.predict(X) for b, e in zip(self.base_score, self.ensembles)], axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Regression values (n,) or class probabilities (n, C)."""
        m = self.margins(X)
        if self.task == "regression":
            return m[:, 0]
        return softmax(m)

    def to_dict(self) -> dict:
        return {
            "kind": "gbt",
            "task": self.task,
            "base_score": [float(b) for b in self.base_score],
            "learning_rate": self.learning_rate,
            "n_features": self.n_features,
            "params": asdict(self.params),
            "ensembles": [e.to_dict() for e in self.ensembles],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtModel":
        return cls(d["task"], np.asarray(d["base_score"], dtype=np.float64),
                   tuple(TreeArrays.from_dict(e) for e in d["ensembles"]), float(d["learning_rate"]),
                   int(d["n_features"]), GbtParams(**d.get("params", {})))


def softmax(m: np.ndarray) -> np.ndarray:
    z = m - m.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _boost(X, order, y, base, params: GbtParams, logistic: bool) -> TreeArrays:
    builder = _Builder()
    F = np.full(X.shape[0], base)
    w = np.ones(X.shape[0])
    for _ in range(params.n_trees):
        r = y - (_sigmoid(F) if logistic else F)
        F = F + grow(builder, X, order, r, w, max_depth=params.max_depth,
                     min_leaf=params.min_samples_leaf, scale=params.learning_rate)
    return builder.arrays()


def fit_gbt(X: np.ndarray, y: np.ndarray, params: GbtParams | None = None, task: str = "regression",
            n_classes: int | None = None) -> GbtModel:
    """Fit on ``X`` that may contain NaN for missing entries."""
    params = params or GbtParams()
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
    if X.shape[0] == 0:
        raise ValueError("cannot fit on zero rows")
    order = column_order(X)
    if task == "regression":
        if not np.all(np.isfinite(y)):
            raise ValueError("regression targets must be finite")
        base = float(y.mean())
        ens = _boost(X, order, y, base, params, logistic=False)
        return GbtModel(task, np.array([base]), (ens,), params.learning_rate, X.shape[1], params)
    if task != "classification":
        raise ValueError(f"unknown task {task!r}")
    codes = y.astype(np.int64)
    C = int(n_classes if n_classes is not None else codes.max() + 1)
    bases, ensembles = [], []
    for k in range(C):
        yk = (codes == k).astype(np.float64)
        prior = min(max(yk.mean(), 1e-6), 1 - 1e-6)
        base = float(np.log(prior / (1 - prior)))
        bases.append(base)
        ensembles.append(_boost(X, order, yk, base, params, logistic=True))
    return GbtModel(task, np.array(bases), tuple(ensembles), params.learning_rate, X.shape[1], params)
