"""Hot loops: split search, tree growth, ensemble prediction, coalition reduction.

The compiled extension ``_core`` is used when it imports; otherwise the numpy
module ``_fallback`` is.  Set ``IMPUTESHAP_PURE_PYTHON=1`` to force the
fallback.  ``BACKEND`` names the active one.
"""

from __future__ import annotations

import importlib
import os

import numpy as np

from . import _fallback

_core = None
if os.environ.get("IMPUTESHAP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        _core = importlib.import_module(f"{__name__}._core")
    except ImportError:  # pragma: no cover - depends on build
        _core = None

BACKEND = "cython" if _core is not None else "python"
_impl = _core if _core is not None else _fallback


def _c(a, dtype):
    return np.ascontiguousarray(a, dtype=dtype)


def best_split(X, order, w, r, features, min_leaf, min_gain, impl=None):
    impl = impl or _impl
    return impl.best_split(_c(X, np.float64), _c(order, np.int64), _c(w, np.float64), _c(r, np.float64),
                           _c(features, np.int64), float(min_leaf), float(min_gain))


def grow_tree(X, order, r, w, max_depth, min_leaf, scale, keys=None, n_candidates=0, impl=None):
    impl = impl or _impl
    w = _c(w, np.float64)
    if not (w > 0).any():
        raise ValueError("grow_tree needs at least one row with positive weight")
    if keys is not None:
        keys = _c(keys, np.float64)
    return impl.grow_tree(_c(X, np.float64), _c(order, np.int64), _c(r, np.float64), w,
                          int(max_depth), float(min_leaf), float(scale), keys, int(n_candidates))


def predict_ensemble(X, arrays, impl=None):
    impl = impl or _impl
    return impl.predict_ensemble(_c(X, np.float64), arrays.feature, arrays.threshold, arrays.left,
                                 arrays.right, arrays.default_left, arrays.value, arrays.roots)


def coalition_shapley(v, weights, p, impl=None):
    impl = impl or _impl
    v = _c(v, np.float64)
    if v.ndim == 1:
        return impl.coalition_shapley(v[:, None].copy(), _c(weights, np.float64), int(p))[:, 0]
    return impl.coalition_shapley(v, _c(weights, np.float64), int(p))


def implementations():
    """The available backends, compiled first."""
    return [m for m in (_core, _fallback) if m is not None]
