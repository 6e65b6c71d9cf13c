"""Bundled example tables and the synthetic generators behind them.

``diabetes_style``, ``california_style`` and ``glass_style`` are synthetic
stand-ins with the shape of the public tables they are named after (same
column names and sizes, correlated Gaussian features, a known target
mechanism).  ``digits_slice`` is 500 rows of the UCI optical digits, each
8x8 image area-averaged to 6x6; it is explained with 2x2 pixel blocks as
players so exact enumeration stays at 9 players.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..data import DataMatrix, Task, load_csv
from ..rng import stream

HERE = Path(__file__).parent

BUNDLED = {
    "diabetes_style": ("target", Task.REGRESSION),
    "california_style": ("target", Task.REGRESSION),
    "glass_style": ("Type", Task.CLASSIFICATION),
    "digits_slice": ("digit", Task.CLASSIFICATION),
}

DIABETES_FEATURES = ("Pregnancies", "Glucose", "BloodPressure", "SkinThickness", "Insulin", "BMI",
                     "DiabetesPedigreeFunction", "Age")
CALIFORNIA_FEATURES = ("MedInc", "HouseAge", "AveRooms", "AveBedrms", "Population", "AveOccup", "Latitude",
                       "Longitude")
GLASS_FEATURES = ("RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe")
GLASS_CLASS_SIZES = (70, 76, 17, 13, 9, 29)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"no bundled dataset {name!r}; have {sorted(BUNDLED)}")
    return HERE / f"{name}.csv"


def load_bundled(name: str) -> DataMatrix:
    target, task = BUNDLED[name]
    return load_csv(bundled_path(name), target, task)


def default_groups(name: str):
    if name == "digits_slice":
        return image_block_groups(6, 2)
    return None


def image_block_groups(side: int, block: int) -> list[list[int]]:
    """Pixel indices (row-major ``side x side`` image) of each ``block x block`` tile."""
    groups = []
    for bi in range(0, side, block):
        for bj in range(0, side, block):
            groups.append([r * side + c for r in range(bi, min(bi + block, side))
                           for c in range(bj, min(bj + block, side))])
    return groups


def _correlated(rng, n, p, strength=0.6):
    loadings = rng.normal(size=(p, 2)) * strength
    cov = loadings @ loadings.T + np.diag(rng.uniform(0.4, 1.0, size=p))
    return rng.multivariate_normal(np.zeros(p), cov, size=n, method="cholesky")


def make_regression(n: int, feature_names, seed: int, noise: float = 0.6) -> DataMatrix:
    """Correlated Gaussian features, a sparse-ish linear target with one mild
    interaction, Gaussian noise."""
    rng = stream(seed, "regression", n, len(feature_names))
    p = len(feature_names)
    Z = _correlated(rng, n, p)
    beta = rng.normal(size=p) * np.where(rng.random(p) < 0.75, 1.0, 0.15)
    y = Z @ beta + 0.3 * Z[:, 0] * Z[:, 1] + noise * rng.normal(size=n)
    scale = rng.uniform(0.5, 20.0, size=p)
    shift = rng.uniform(-5, 50, size=p)
    return DataMatrix(Z * scale + shift, y, tuple(feature_names), Task.REGRESSION)


def make_classification(class_sizes, feature_names, seed: int, separation: float = 1.4) -> DataMatrix:
    """Class-conditional correlated Gaussians with class-specific means."""
    rng = stream(seed, "classification", len(class_sizes), len(feature_names))
    p = len(feature_names)
    centers = rng.normal(size=(len(class_sizes), p)) * separation
    blocks, labels = [], []
    for k, size in enumerate(class_sizes):
        blocks.append(_correlated(rng, size, p, 0.5) + centers[k])
        labels.append(np.full(size, k))
    X = np.vstack(blocks)
    y = np.concatenate(labels).astype(float)
    perm = rng.permutation(X.shape[0])
    return DataMatrix(X[perm], y[perm], tuple(feature_names), Task.CLASSIFICATION)


def diabetes_style(seed: int = 2024) -> DataMatrix:
    return make_regression(768, DIABETES_FEATURES, seed)


def california_style(seed: int = 2024, n: int = 2000) -> DataMatrix:
    return make_regression(n, CALIFORNIA_FEATURES, seed, noise=0.8)


def glass_style(seed: int = 2024) -> DataMatrix:
    return make_classification(GLASS_CLASS_SIZES, GLASS_FEATURES, seed)
