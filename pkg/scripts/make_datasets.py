"""Regenerate the bundled CSVs under src/imputeshap/datasets/.

The synthetic tables come from imputeshap.datasets generators; the digits
slice needs scikit-learn (only for this script).
"""

import numpy as np

from imputeshap.data import DataMatrix, Task, write_csv
from imputeshap.datasets import HERE, california_style, diabetes_style, glass_style
from imputeshap.rng import stream


def digits_slice(n=500, seed=2024):
    from sklearn.datasets import load_digits

    d = load_digits()
    rows = np.sort(stream(seed, "digits").choice(d.images.shape[0], size=n, replace=False))
    images = d.images[rows]
    # 8x8 -> 6x6 area average: each output pixel covers 4/3 input pixels per axis
    edges = np.linspace(0, 8, 7)
    weights = np.zeros((6, 8))
    for o in range(6):
        for i in range(8):
            weights[o, i] = max(0.0, min(edges[o + 1], i + 1) - max(edges[o], i))
    weights /= weights.sum(axis=1, keepdims=True)
    small = np.einsum("oi,nij,pj->nop", weights, images, weights)
    names = tuple(f"px{r}{c}" for r in range(6) for c in range(6))
    return DataMatrix(np.round(small.reshape(n, 36), 6), d.target[rows].astype(float), names,
                      Task.CLASSIFICATION)


if __name__ == "__main__":
    write_csv(HERE / "diabetes_style.csv", diabetes_style(), target_column="target")
    write_csv(HERE / "california_style.csv", california_style(), target_column="target")
    write_csv(HERE / "glass_style.csv", glass_style(), target_column="Type")
    write_csv(HERE / "digits_slice.csv", digits_slice(), target_column="digit")
