"""Downstream predictors: closed-form linear regression and boosted trees."""

import json
from pathlib import Path

from .forest import ForestModel, fit_forest
from .gbt import GbtModel, GbtParams, fit_gbt, softmax
from .linear import LinearModel, MissingInputError, SingularFitError, fit_linear
from .tree import TreeArrays

__all__ = [
    "ForestModel", "GbtModel", "GbtParams", "LinearModel", "MissingInputError", "SingularFitError",
    "TreeArrays", "fit_forest", "fit_gbt", "fit_linear", "load_model", "predict", "save_model", "softmax",
]


def predict(model, X):
    """Uniform entry point: regression values or class-probability rows."""
    return model.predict(X)


def save_model(path, model, **extra) -> None:
    """JSON document ``{"kind": "linear"|"gbt", ...}``; ``extra`` keys (e.g.
    ``background``, ``feature_names``) are stored alongside."""
    d = model.to_dict()
    for k, v in extra.items():
        d[k] = v.tolist() if hasattr(v, "tolist") else v
    Path(path).write_text(json.dumps(d, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path):
    """Returns ``(model, document)``."""
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = d.get("kind")
    if kind == "linear":
        return LinearModel.from_dict(d), d
    if kind == "gbt":
        return GbtModel.from_dict(d), d
    raise ValueError(f"{path}: unknown model kind {kind!r}")
