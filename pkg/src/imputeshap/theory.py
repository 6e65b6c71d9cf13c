"""Executable checks of the mean-imputation results for univariate linear
regression.

All variances and covariances here use the population (divide by N)
convention.

* Under mean imputation fitted on train, every imputed test entry gets a
  Shapley value of exactly zero, so global importance only sums over observed
  test entries (:func:`check_vanishing_attribution`).
* Replacing one point by the mean of the others changes Cov(x, y) by
  ``(1/N) (y_i - mean(y)) (mean(x without i) - x_i)`` (:func:`cov_delta`).
* Mean imputation never increases a column's variance
  (:func:`check_variance_shrink`).
* For a linear model the mean attribution of a feature is
  ``(mean(z) - E[x]) * beta`` (:func:`shap_mean_identity`).
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from . import impute
from .data import DataMatrix, MaskedMatrix, Task, apply_mcar
from .metrics import ground_truth
from .model import LinearModel, fit_linear
from .rng import derive_seed, stream
from .shapley import linear_shapley

VANISHING_SHAP_TOL = 1e-10
VANISHING_IMPORTANCE_TOL = 1e-12
COV_DELTA_TOL = 1e-12
MEAN_IDENTITY_TOL = 1e-12


class TheoryScopeError(ValueError):
    """A check was called outside the setting where its identity holds."""


@dataclass(frozen=True)
class VanishingReport:
    max_abs_shap_on_imputed: float
    importance_full: float
    importance_observed_only: float
    n_obs_test: int
    m: int
    passed: bool
    train_rate: float = float("nan")
    test_rate: float = float("nan")
    seed: int = -1
    importance_reference: float = float("nan")


@dataclass(frozen=True)
class CovDeltaReport:
    direct_delta: float
    formula_delta: float
    N: int
    i: int
    x_bar: float
    x_bar_prime: float
    y_bar: float

    @property
    def residual(self) -> float:
        return abs(self.direct_delta - self.formula_delta)

    @property
    def passed(self) -> bool:
        return self.residual < COV_DELTA_TOL


@dataclass(frozen=True)
class VarianceShrinkReport:
    var_imputed: float
    var_observed: float
    var_truth: float | None
    passed: bool


def pop_var(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean((x - x.mean()) ** 2))


def pop_cov(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean((x - x.mean()) * (y - y.mean())))


def _univariate(masked: MaskedMatrix, name: str):
    if masked.p != 1:
        raise TheoryScopeError(f"{name} must be univariate, got p={masked.p}")


def check_vanishing_attribution(train: MaskedMatrix, test: MaskedMatrix, imputer: str = "mean") -> VanishingReport:
    """Mean-impute train and test with train statistics, fit the linear model
    on imputed train, explain every test row in closed form."""
    _univariate(train, "train")
    _univariate(test, "test")
    if imputer != "mean":
        raise TheoryScopeError(f"the vanishing-attribution identity holds for mean imputation, not {imputer!r}")
    fitted, x_imp = impute.fit_transform(impute.ImputerSpec("mean"), train)
    model = fit_linear(x_imp.values, train.target)
    z_imp = impute.transform(fitted, test)
    phi = linear_shapley(model, z_imp.values)[:, 0]
    observed = test.mask[:, 0]
    m = phi.shape[0]
    abs_phi = np.abs(phi)
    max_imp = float(abs_phi[~observed].max()) if (~observed).any() else 0.0
    full = float(abs_phi.sum() / m)
    obs_only = float(abs_phi[observed].sum() / m)
    passed = max_imp < VANISHING_SHAP_TOL and abs(full - obs_only) < VANISHING_IMPORTANCE_TOL
    return VanishingReport(max_imp, full, obs_only, int(observed.sum()), m, passed, train.rate, test.rate)


def cov_delta(x, y, i: int) -> CovDeltaReport:
    """Both sides of the one-point covariance change, computed independently."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    N = x.shape[0]
    if y.shape != (N,):
        raise ValueError("x and y must have the same length")
    if N < 2:
        raise ValueError("need N >= 2")
    if not 0 <= i < N:
        raise IndexError(f"index {i} out of range for N={N}")
    others = np.delete(x, i)
    x_bar_prime = float(others.mean())
    x_prime = x.copy()
    x_prime[i] = x_bar_prime
    direct = pop_cov(x_prime, y) - pop_cov(x, y)
    y_bar = float(y.mean())
    formula = (y[i] - y_bar) * (x_bar_prime - x[i]) / N
    return CovDeltaReport(float(direct), float(formula), N, int(i), float(x.mean()), x_bar_prime, y_bar)


def check_variance_shrink(masked: MaskedMatrix, imputed: np.ndarray, column: int = 0,
                          atol: float = 1e-12) -> VarianceShrinkReport:
    """Var(x') <= Var(x) and Var(x') <= Var(observed entries) for a
    mean-imputed column."""
    obs = masked.mask[:, column]
    col = np.asarray(imputed, dtype=np.float64)
    col = col[:, column] if col.ndim == 2 else col
    if not obs.any():
        raise TheoryScopeError("column has no observed entries")
    fill = masked.values[obs, column].mean()
    if (~obs).any() and not np.allclose(col[~obs], fill, rtol=0, atol=1e-12 * max(1.0, abs(fill))):
        raise TheoryScopeError("imputed column is not a mean imputation of the masked column")
    v_imp = pop_var(col)
    v_obs = pop_var(masked.values[obs, column])
    v_truth = pop_var(ground_truth(masked)[:, column])
    passed = v_imp <= v_obs + atol and v_imp <= v_truth + atol
    return VarianceShrinkReport(v_imp, v_obs, v_truth, passed)


def shap_mean_identity(model: LinearModel, rows: np.ndarray) -> np.ndarray:
    """Per-feature ``mean(phi) - (mean(rows) - E[x]) * beta``."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    phi = linear_shapley(model, rows)
    return phi.mean(axis=0) - (rows.mean(axis=0) - model.feature_means) * model.coefficients


def synthetic_univariate(n: int, seed: int, slope: float = 2.0, noise: float = 0.5) -> DataMatrix:
    rng = stream(seed, "synthetic-univariate", n)
    x = rng.normal(size=n)
    y = slope * x + noise * rng.normal(size=n)
    return DataMatrix(x[:, None], y, ("x",), Task.REGRESSION)


DEFAULT_GRID = tuple(round(0.1 * k, 1) for k in range(1, 9))


def vanishing_grid(train_rates: Sequence[float] = DEFAULT_GRID, test_rates: Sequence[float] = DEFAULT_GRID,
                 seeds: Iterable[int] = range(5), n_train: int = 200, n_test: int = 100) -> list[VanishingReport]:
    """Vanishing-attribution check at every (seed, train rate, test rate), with the complete
    data importance alongside for the descriptive trend report."""
    reports = []
    for seed in seeds:
        train = synthetic_univariate(n_train, derive_seed(seed, "train"))
        test = synthetic_univariate(n_test, derive_seed(seed, "test"))
        ref_model = fit_linear(train.values, train.target)
        ref_imp = float(np.abs(linear_shapley(ref_model, test.values)).mean())
        for r_tr, r_te in itertools.product(train_rates, test_rates):
            rep = check_vanishing_attribution(apply_mcar(train, r_tr, derive_seed(seed, "mask-train", str(r_tr))),
                                 apply_mcar(test, r_te, derive_seed(seed, "mask-test", str(r_te))))
            reports.append(VanishingReport(**{**asdict(rep), "seed": int(seed), "importance_reference": ref_imp}))
    return reports


def cov_delta_sweep(n_cases: int = 1000, seed: int = 0, n_range: tuple[int, int] = (2, 100)) -> list[CovDeltaReport]:
    rng = stream(seed, "cov-delta")
    out = []
    for _ in range(n_cases):
        N = int(rng.integers(n_range[0], n_range[1] + 1))
        x = rng.normal(size=N) * rng.uniform(0.1, 10)
        y = rng.normal(size=N) * rng.uniform(0.1, 10)
        out.append(cov_delta(x, y, int(rng.integers(N))))
    return out


@dataclass(frozen=True)
class CheckRow:
    check: str
    parameters: str
    residual: float
    passed: bool


def run_checks(seeds: Iterable[int] = range(5), grid: Sequence[float] = DEFAULT_GRID,
               n_cov_cases: int = 1000, seed: int = 0) -> list[CheckRow]:
    """Every theory check on synthetic data, as flat rows."""
    rows: list[CheckRow] = []
    for rep in vanishing_grid(grid, grid, seeds):
        resid = max(rep.max_abs_shap_on_imputed, abs(rep.importance_full - rep.importance_observed_only))
        rows.append(CheckRow("vanishing_attribution", f"seed={rep.seed};train_rate={rep.train_rate};test_rate={rep.test_rate}",
                             resid, rep.passed))
    for k, rep in enumerate(cov_delta_sweep(n_cov_cases, seed)):
        rows.append(CheckRow("cov_delta", f"case={k};N={rep.N};i={rep.i}", rep.residual, rep.passed))
    for s in seeds:
        data = synthetic_univariate(200, derive_seed(s, "variance"))
        for rate in grid:
            masked = apply_mcar(data, rate, derive_seed(s, "variance-mask", str(rate)))
            _, imp = impute.fit_transform(impute.ImputerSpec("mean"), masked)
            rep = check_variance_shrink(masked, imp.values)
            rows.append(CheckRow("variance_shrink", f"seed={s};rate={rate}",
                                 max(0.0, rep.var_imputed - min(rep.var_observed, rep.var_truth)), rep.passed))
        train = synthetic_univariate(200, derive_seed(s, "mean-identity-train"))
        shifted = synthetic_univariate(100, derive_seed(s, "mean-identity-test"))
        model = fit_linear(train.values, train.target)
        for label, rows_ in (("train", train.values), ("shifted", shifted.values + 0.75)):
            resid = float(np.abs(shap_mean_identity(model, rows_)).max())
            rows.append(CheckRow("shap_mean_identity", f"seed={s};rows={label}", resid, resid < MEAN_IDENTITY_TOL))
    return rows


def write_check_rows(path, rows: Iterable[CheckRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "parameters", "residual", "pass"])
        for r in rows:
            w.writerow([r.check, r.parameters, repr(float(r.residual)), int(r.passed)])


def write_trend_report(path, reports: Iterable[VanishingReport]) -> None:
    """Descriptive table: importance under mean imputation vs complete data."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "train_rate", "test_rate", "importance_imputed", "importance_reference", "ratio"])
        for r in reports:
            ratio = r.importance_full / r.importance_reference if r.importance_reference else math.nan
            w.writerow([r.seed, r.train_rate, r.test_rate, repr(r.importance_full),
                        repr(r.importance_reference), repr(ratio)])
