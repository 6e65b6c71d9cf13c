"""Imputers with a fit-on-train / transform-anything interface.

Test-time imputation only ever uses state derived from the training table.
Every method leaves observed cells bit-for-bit unchanged.

>>> spec = ImputerSpec("mean")
>>> fitted = fit(spec, train)              # doctest: +SKIP
>>> test_imputed = transform(fitted, test)  # doctest: +SKIP
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

from ..data import DataError, MaskedMatrix
from . import dimv, mice, missforest, simple, softimpute

METHODS = {
    "mean": simple,
    "mice": mice,
    "dimv": dimv,
    "missforest": missforest,
    "softimpute": softimpute,
}


class ImputationWarning(UserWarning):
    """Iterative imputer stopped at its iteration cap."""


@dataclass(frozen=True)
class ImputerSpec:
    method: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown imputation method {self.method!r}; choose from {sorted(METHODS)}")
        defaults = METHODS[self.method].DEFAULTS
        unknown = set(self.hyperparameters) - set(defaults)
        if unknown:
            raise ValueError(f"{self.method}: unknown hyperparameters {sorted(unknown)}")
        merged = {**defaults, **self.hyperparameters}
        METHODS[self.method].validate(merged)
        object.__setattr__(self, "hyperparameters", MappingProxyType(merged))


@dataclass(frozen=True, eq=False)
class ImputedMatrix:
    values: np.ndarray
    source_mask: np.ndarray
    fitted_params: Any = None
    diagnostics: Mapping[str, Any] = field(default_factory=dict)

    @property
    def n_imputed(self) -> int:
        return int((~self.source_mask).sum())


@dataclass(frozen=True, eq=False)
class FittedImputer:
    spec: ImputerSpec
    state: Any
    p: int
    feature_names: tuple[str, ...]
    train_result: ImputedMatrix


def _finish(masked: MaskedMatrix, filled: np.ndarray, state, diag: dict) -> ImputedMatrix:
    out = np.where(masked.mask, masked.values, filled)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("imputation produced non-finite values")
    out.flags.writeable = False
    if diag.get("converged") is False:
        warnings.warn(f"imputer stopped after {diag.get('iterations')} iterations without converging",
                      ImputationWarning, stacklevel=3)
    return ImputedMatrix(out, masked.mask, state, MappingProxyType(diag))


def fit(spec: ImputerSpec, train: MaskedMatrix) -> FittedImputer:
    empty = np.flatnonzero(~train.mask.any(axis=0))
    if empty.size:
        names = [train.feature_names[j] for j in empty]
        raise DataError(f"no observed training entries in column(s) {names}")
    impl = METHODS[spec.method]
    state, filled, diag = impl.fit(np.array(train.values), train.mask, dict(spec.hyperparameters), spec.seed)
    result = _finish(train, filled, state, diag)
    return FittedImputer(spec, state, train.p, train.feature_names, result)


def transform(fitted: FittedImputer, data: MaskedMatrix) -> ImputedMatrix:
    if data.p != fitted.p or data.feature_names != fitted.feature_names:
        raise DataError(f"expected {fitted.p} features {fitted.feature_names}, got {data.p} {data.feature_names}")
    impl = METHODS[fitted.spec.method]
    filled, diag = impl.transform(fitted.state, np.array(data.values), data.mask)
    return _finish(data, filled, fitted.state, diag)


def fit_transform(spec: ImputerSpec, train: MaskedMatrix) -> tuple[FittedImputer, ImputedMatrix]:
    fitted = fit(spec, train)
    return fitted, fitted.train_result


__all__ = ["METHODS", "FittedImputer", "ImputationWarning", "ImputedMatrix", "ImputerSpec",
           "fit", "fit_transform", "transform"]
