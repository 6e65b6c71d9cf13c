"""Time the compiled kernels against the numpy fallback on realistic shapes.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run on identical inputs by both backends; outputs are compared
for equality before timing so a speedup never hides a divergence.
"""

import argparse
import timeit

import numpy as np

from imputeshap import _kernels
from imputeshap._kernels import _fallback
from imputeshap.datasets import load_bundled
from imputeshap.model import GbtParams, fit_gbt
from imputeshap.model.tree import column_order
from imputeshap.shapley import coalition_weights


def cases():
    rng = np.random.default_rng(0)
    diabetes = load_bundled("diabetes_style")
    X = diabetes.values.copy()
    X[rng.random(X.shape) < 0.3] = np.nan
    X = np.ascontiguousarray(X)
    order = column_order(X)
    r = diabetes.target - diabetes.target.mean()
    w = np.ones(X.shape[0])
    boot = np.bincount(rng.integers(0, X.shape[0], X.shape[0]), minlength=X.shape[0]).astype(float)
    keys = rng.random((2 * X.shape[0] + 1, X.shape[1]))
    feats = np.arange(X.shape[1])
    model = fit_gbt(X, diabetes.target, GbtParams(n_trees=100))
    synth = np.repeat(X[:64], 4, axis=0)
    v = rng.normal(size=(1 << 12, 3))
    wts = coalition_weights(12)
    return {
        "best_split (768x8, 30% missing)": lambda impl: _kernels.best_split(X, order, w, r, feats, 1, 1e-14, impl),
        "grow_tree depth 3 (GBT tree)": lambda impl: _kernels.grow_tree(X, order, r, w, 3, 5, 0.1, None, 0, impl),
        "grow_tree depth 8 (forest tree)": lambda impl: _kernels.grow_tree(X, order, r, boot, 8, 1, 1.0, keys, 2,
                                                                           impl),
        "predict 100 trees x 256 rows": lambda impl: _kernels.predict_ensemble(synth, model.ensembles[0], impl),
        "coalition_shapley p=12, 3 outputs": lambda impl: _kernels.coalition_shapley(v, wts, 12, impl),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=0, atol=1e-12, equal_nan=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = _kernels.implementations()
    if len(impls) < 2:
        print("compiled extension not built; only the fallback is available")
        return
    core = impls[0]
    print(f"{'kernel':38s} {'cython ms':>10s} {'python ms':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        if not same(fn(core), fn(_fallback)):
            raise SystemExit(f"{name}: backends disagree")
        number = 3
        t_c = min(timeit.repeat(lambda: fn(core), number=number, repeat=args.repeat)) / number * 1e3
        t_p = min(timeit.repeat(lambda: fn(_fallback), number=number, repeat=args.repeat)) / number * 1e3
        print(f"{name:38s} {t_c:10.3f} {t_p:10.3f} {t_p / t_c:7.1f}x")


if __name__ == "__main__":
    main()
