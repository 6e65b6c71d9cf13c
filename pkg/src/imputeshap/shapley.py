"""Shapley attributions: exact coalition enumeration, the linear closed form,
global importance and beeswarm tables.

Two value functions are supported by :func:`exact_shapley`:

``marginal_background``
    ``v(S)`` is the model output on the explained row with every feature
    outside ``S`` replaced by background values, averaged over background
    rows.  Missing entries inside ``S`` are passed through, so a model with
    native missing-value routing is explained as it actually behaves.
``retrain``
    ``v(S)`` refits the model family on the columns in ``S`` and predicts the
    explained row from those columns; ``v(empty)`` is the intercept-only fit.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .model import LinearModel, MissingInputError, fit_linear

MAX_PLAYERS = 16


class ValueMode(str, Enum):
    MARGINAL = "marginal_background"
    RETRAIN = "retrain"


class ShapleyError(ValueError):
    pass


def coalition_weights(p: int) -> np.ndarray:
    """``w[s] = s! (p - s - 1)! / p!`` for ``s = 0 .. p-1``, via log-gamma."""
    if p < 1:
        raise ShapleyError("need at least one player")
    s = np.arange(p)
    logw = np.array([math.lgamma(k + 1) + math.lgamma(p - k) - math.lgamma(p + 1) for k in s])
    return np.exp(logw)


@dataclass(frozen=True)
class ValueFunction:
    mode: ValueMode = ValueMode.MARGINAL
    background: np.ndarray | None = None
    train_X: np.ndarray | None = None
    train_y: np.ndarray | None = None
    refit: Callable | None = None

    @classmethod
    def marginal(cls, background) -> "ValueFunction":
        return cls(ValueMode.MARGINAL, background=np.atleast_2d(np.asarray(background, dtype=np.float64)))

    @classmethod
    def retrain(cls, X, y, refit: Callable | None = None) -> "ValueFunction":
        return cls(ValueMode.RETRAIN, train_X=np.asarray(X, dtype=np.float64),
                   train_y=np.asarray(y, dtype=np.float64), refit=refit or fit_linear)


def _bits(n_players: int) -> np.ndarray:
    masks = np.arange(1 << n_players)
    return ((masks[:, None] >> np.arange(n_players)) & 1).astype(bool)


def coalition_values(vf: ValueFunction, model, row: np.ndarray, groups: Sequence[Sequence[int]] | None = None):
    """``v(S)`` for every coalition bitmask; shape (2^q, n_outputs).

    ``groups`` lets several columns act as one player (q = number of groups).
    """
    row = np.asarray(row, dtype=np.float64)
    p = row.shape[0]
    groups = [list(g) for g in groups] if groups is not None else [[j] for j in range(p)]
    q = len(groups)
    if q > MAX_PLAYERS:
        raise ShapleyError(f"exact enumeration limited to {MAX_PLAYERS} players, got {q}")
    bits = _bits(q)
    member = np.zeros((bits.shape[0], p), dtype=bool)
    for g, cols in enumerate(groups):
        member[:, cols] = bits[:, [g]]
    if vf.mode is ValueMode.MARGINAL:
        if vf.background is None:
            raise ShapleyError("marginal mode needs background rows")
        bg = vf.background
        if np.isnan(row).any() and not getattr(model, "accepts_missing", False):
            raise MissingInputError("row has missing entries and the model cannot route them; impute first")
        # (2^q * B, p) synthetic rows, grouped by coalition
        synth = np.where(member[:, None, :], row[None, None, :], bg[None, :, :]).reshape(-1, p)
        out = np.asarray(model.predict(synth), dtype=np.float64)
        out = out.reshape(bits.shape[0], bg.shape[0], -1)
        return out.mean(axis=1)
    if vf.mode is ValueMode.RETRAIN:
        if vf.refit is None or vf.train_X is None:
            raise ShapleyError("retrain mode needs training data and a refit handle")
        vals = np.empty((bits.shape[0], 1))
        for k in range(bits.shape[0]):
            cols = np.flatnonzero(member[k])
            m = vf.refit(vf.train_X[:, cols], vf.train_y)
            vals[k, 0] = float(np.asarray(m.predict(row[cols][None, :])).reshape(-1)[0])
        return vals
    raise ShapleyError(f"unknown value-function mode {vf.mode!r}")


def shapley_from_values(values: np.ndarray) -> np.ndarray:
    """Attributions (q, n_outputs) from coalition values indexed by bitmask."""
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if values.shape[0] == 1 and values.shape[1] > 1:
        values = values.T
    q = int(values.shape[0]).bit_length() - 1
    if 1 << q != values.shape[0]:
        raise ShapleyError("coalition table length must be a power of two")
    return _kernels.coalition_shapley(values, coalition_weights(q), q)


def exact_shapley(vf: ValueFunction, model, row, groups=None) -> np.ndarray:
    """Exact attributions of one row; (p,) for scalar models, (p, C) for class
    probabilities."""
    phi = shapley_from_values(coalition_values(vf, model, row, groups))
    return phi[:, 0] if phi.shape[1] == 1 else phi


def linear_shapley(model: LinearModel, rows: np.ndarray) -> np.ndarray:
    """``(x - E[x]) * beta`` per feature; rows may be (p,) or (m, p)."""
    rows = np.asarray(rows, dtype=np.float64)
    if np.isnan(rows).any():
        raise MissingInputError("linear_shapley needs complete rows")
    return (rows - model.feature_means) * model.coefficients


@dataclass(frozen=True, eq=False)
class ShapleyMatrix:
    """Attributions for m explained rows.

    ``values`` has shape (m, p) for a scalar output or (C, m, p) with one
    stack per class.
    """

    values: np.ndarray
    feature_names: tuple[str, ...]
    sample_ids: np.ndarray
    missing_flags: np.ndarray
    feature_values: np.ndarray | None = None
    base_values: np.ndarray | None = None
    class_labels: tuple[int, ...] | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        m, p = v.shape[-2:]
        ids = np.asarray(self.sample_ids)
        flags = np.asarray(self.missing_flags, dtype=bool)
        if ids.shape != (m,) or flags.shape != (m, p) or len(self.feature_names) != p:
            raise ShapleyError("ShapleyMatrix parts disagree in shape")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "missing_flags", flags)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if v.ndim == 3 and self.class_labels is None:
            object.__setattr__(self, "class_labels", tuple(range(v.shape[0])))

    @property
    def is_multiclass(self) -> bool:
        return self.values.ndim == 3

    @property
    def m(self) -> int:
        return self.values.shape[-2]

    @property
    def p(self) -> int:
        return self.values.shape[-1]

    def for_class(self, c: int | None = None) -> np.ndarray:
        if not self.is_multiclass:
            return self.values
        return self.values[self.class_labels.index(c) if c is not None else -1]


def explain_rows(model, rows: np.ndarray, *, background: np.ndarray | None = None,
                 vf: ValueFunction | None = None, feature_names: Sequence[str] | None = None,
                 sample_ids: np.ndarray | None = None, missing_flags: np.ndarray | None = None,
                 feature_values: np.ndarray | None = None, groups=None,
                 closed_form: bool = True) -> ShapleyMatrix:
    """Explain every row of ``rows``.

    Linear models use the closed form unless ``closed_form`` is False; other
    models use enumeration with ``vf`` (default: marginal mode over
    ``background``).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    m, p = rows.shape
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(p))
    if isinstance(model, LinearModel) and closed_form and groups is None and (
            vf is None or vf.mode is ValueMode.MARGINAL):
        ref = model.feature_means if background is None else np.atleast_2d(background).mean(axis=0)
        values = (rows - ref) * model.coefficients
        if np.isnan(values).any():
            raise MissingInputError("linear_shapley needs complete rows")
        base = np.full(m, float(model.intercept + ref @ model.coefficients))
    else:
        if vf is None:
            if background is None:
                raise ShapleyError("need a background row or a value function")
            vf = ValueFunction.marginal(background)
        per_row = []
        base = []
        for i in range(m):
            cv = coalition_values(vf, model, rows[i], groups)
            per_row.append(shapley_from_values(cv))
            base.append(cv[0])
        phi = np.stack(per_row)  # (m, q, K)
        base = np.stack(base)
        if phi.shape[2] == 1:
            values, base = phi[:, :, 0], base[:, 0]
        else:
            values, base = np.transpose(phi, (2, 0, 1)), base.T
        if groups is not None:
            names = tuple("+".join(names[j] for j in g) for g in groups)
    q = values.shape[-1]
    flags = np.zeros((m, q), dtype=bool) if missing_flags is None else np.asarray(missing_flags, dtype=bool)
    if groups is not None and flags.shape[1] != q:
        flags = np.stack([flags[:, list(g)].any(axis=1) for g in groups], axis=1)
    ids = np.arange(m) if sample_ids is None else np.asarray(sample_ids)
    fv = rows if feature_values is None else np.asarray(feature_values, dtype=np.float64)
    if groups is not None and fv.shape[1] != q:
        with warnings.catch_warnings():
            # a fully missing group has no representative value; NaN is right
            warnings.simplefilter("ignore", RuntimeWarning)
            fv = np.stack([np.nanmean(fv[:, list(g)], axis=1) for g in groups], axis=1)
    return ShapleyMatrix(values, names, ids, flags, fv, np.asarray(base))


@dataclass(frozen=True)
class GlobalImportance:
    importance: np.ndarray
    feature_names: tuple[str, ...]
    order: np.ndarray = field(default=None)

    def ranked(self) -> list[tuple[str, float]]:
        return [(self.feature_names[j], float(self.importance[j])) for j in self.order]


def global_importance(phi: ShapleyMatrix | np.ndarray, feature_names: Sequence[str] | None = None,
                      class_label: int | None = None) -> GlobalImportance:
    """Mean absolute attribution per feature, ordered descending (ties by index)."""
    if isinstance(phi, ShapleyMatrix):
        names = phi.feature_names
        values = phi.for_class(class_label)
    else:
        values = np.atleast_2d(np.asarray(phi, dtype=np.float64))
        names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(values.shape[1]))
    if values.shape[0] < 1:
        raise ShapleyError("need at least one explained row")
    imp = np.abs(values).mean(axis=0)
    order = np.lexsort((np.arange(imp.size), -imp))
    return GlobalImportance(imp, tuple(names), order)


@dataclass(frozen=True)
class BeeswarmRecord:
    sample_id: int
    feature: str
    shap_value: float
    feature_value: float
    color_value: float
    was_missing: bool
    rank: int


def beeswarm_export(phi: ShapleyMatrix, feature_values: np.ndarray | None = None,
                    missing_flags: np.ndarray | None = None, class_label: int | None = None) -> list[BeeswarmRecord]:
    """One record per (sample, feature); features ordered by global importance.

    ``color_value`` is the feature value min-max scaled over the non-missing
    entries of that feature (0.5 for constant columns, NaN where missing).
    """
    values = phi.for_class(class_label)
    fv = phi.feature_values if feature_values is None else np.asarray(feature_values, dtype=np.float64)
    if fv is None:
        fv = np.full(values.shape, np.nan)
    flags = phi.missing_flags if missing_flags is None else np.asarray(missing_flags, dtype=bool)
    if fv.shape != values.shape or flags.shape != values.shape:
        raise ShapleyError("feature values, missing flags and attributions must share a shape")
    gi = global_importance(values, phi.feature_names)
    records = []
    for rank, j in enumerate(gi.order):
        col = np.where(flags[:, j], np.nan, fv[:, j])
        finite = col[np.isfinite(col)]
        lo, hi = (finite.min(), finite.max()) if finite.size else (0.0, 0.0)
        for i in range(values.shape[0]):
            missing = bool(flags[i, j])
            if missing or not np.isfinite(col[i]):
                color = float("nan")
            elif hi > lo:
                color = float((col[i] - lo) / (hi - lo))
            else:
                color = 0.5
            records.append(BeeswarmRecord(int(phi.sample_ids[i]), phi.feature_names[j], float(values[i, j]),
                                          float(fv[i, j]), color, missing, rank))
    return records


def write_shapley_csv(path, phi: ShapleyMatrix) -> None:
    """Columns: sample_id, feature, shap_value, feature_value, was_missing, class.

    ``path`` may also be an open text stream."""
    stacks = [(None, phi.values)] if not phi.is_multiclass else list(zip(phi.class_labels, phi.values))
    fv = phi.feature_values if phi.feature_values is not None else np.full(phi.values.shape[-2:], np.nan)

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "feature", "shap_value", "feature_value", "was_missing", "class"])
        for label, vals in stacks:
            for i in range(vals.shape[0]):
                for j, name in enumerate(phi.feature_names):
                    w.writerow([int(phi.sample_ids[i]), name, repr(float(vals[i, j])),
                                "" if phi.missing_flags[i, j] else repr(float(fv[i, j])),
                                int(phi.missing_flags[i, j]), "" if label is None else label])

    if hasattr(path, "write"):
        emit(path)
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            emit(fh)
