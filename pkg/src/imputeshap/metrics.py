"""Evaluation quantities: prediction MSE, imputation MSE, MSE between Shapley
matrices, and aggregation over repetitions.

This is the only module that reads the simulated-missing ground truth of a
:class:`~imputeshap.data.MaskedMatrix` (see :func:`ground_truth`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import MaskedMatrix
from .impute import ImputedMatrix
from .shapley import ShapleyMatrix


class MetricError(ValueError):
    pass


class _Unavailable:
    """Marker for a metric that is undefined or a cell that failed; never 0."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNAVAILABLE"

    def __bool__(self):
        return False

    def __reduce__(self):
        return "UNAVAILABLE"


UNAVAILABLE = _Unavailable()


def ground_truth(masked: MaskedMatrix) -> np.ndarray:
    """Complete values behind a masked table, for scoring only."""
    return masked._base.values


def prediction_mse(pred: Sequence[float] | np.ndarray, truth: Sequence[float] | np.ndarray) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise MetricError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise MetricError("need at least one prediction")
    d = pred - truth
    return float(np.mean(d * d))


def imputation_mse(imputed: ImputedMatrix | np.ndarray, truth: MaskedMatrix | np.ndarray,
                   mask: np.ndarray | None = None):
    """MSE over the simulated-missing cells only; :data:`UNAVAILABLE` if there are none."""
    values = imputed.values if isinstance(imputed, ImputedMatrix) else np.asarray(imputed, dtype=np.float64)
    if isinstance(truth, MaskedMatrix):
        if mask is None:
            mask = truth.mask
        truth = ground_truth(truth)
    if mask is None:
        if not isinstance(imputed, ImputedMatrix):
            raise MetricError("need a mask to know which cells were imputed")
        mask = imputed.source_mask
    truth = np.asarray(truth, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if values.shape != truth.shape or mask.shape != truth.shape:
        raise MetricError("imputed table, ground truth and mask must share a shape")
    missing = ~mask
    if not missing.any():
        return UNAVAILABLE
    d = values[missing] - truth[missing]
    return float(np.mean(d * d))


def mse_shap(phi_method: ShapleyMatrix, phi_reference: ShapleyMatrix) -> float:
    """Mean squared difference over all entries (all class stacks for
    classification).  Refuses misaligned rows, features or classes."""
    if not np.array_equal(phi_method.sample_ids, phi_reference.sample_ids):
        raise MetricError("Shapley matrices explain different samples")
    if phi_method.feature_names != phi_reference.feature_names:
        raise MetricError("Shapley matrices have different feature orders")
    if phi_method.values.shape != phi_reference.values.shape:
        raise MetricError(f"shape mismatch: {phi_method.values.shape} vs {phi_reference.values.shape}")
    if phi_method.class_labels != phi_reference.class_labels:
        raise MetricError("Shapley matrices cover different classes")
    d = phi_method.values - phi_reference.values
    return float(np.mean(d * d))


def mse_shap_per_class(phi_method: ShapleyMatrix, phi_reference: ShapleyMatrix) -> dict:
    mse_shap(phi_method, phi_reference)
    if not phi_method.is_multiclass:
        return {None: mse_shap(phi_method, phi_reference)}
    d = phi_method.values - phi_reference.values
    return {c: float(np.mean(d[k] ** 2)) for k, c in enumerate(phi_method.class_labels)}


@dataclass(frozen=True)
class MetricCell:
    dataset: str
    rate: float
    method: str
    criteria: str
    values: tuple
    value: object
    minimum: object
    maximum: object
    std: object

    @property
    def n_repetitions(self) -> int:
        return len(self.values)

    @property
    def available(self) -> bool:
        return self.value is not UNAVAILABLE


def aggregate(values: Sequence, dataset: str = "", rate: float = float("nan"), method: str = "",
              criteria: str = "") -> MetricCell:
    """Arithmetic mean over repetitions.  If any repetition is unavailable the
    whole cell is unavailable."""
    values = tuple(values)
    if not values:
        raise MetricError("need at least one repetition")
    if any(v is UNAVAILABLE or v is None for v in values):
        return MetricCell(dataset, rate, method, criteria, values, UNAVAILABLE, UNAVAILABLE, UNAVAILABLE,
                          UNAVAILABLE)
    arr = np.array(values, dtype=np.float64)
    mean = math.fsum(values) / len(values)
    return MetricCell(dataset, rate, method, criteria, values, mean, float(arr.min()), float(arr.max()),
                      float(arr.std()))
