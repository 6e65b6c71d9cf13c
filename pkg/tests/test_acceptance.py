"""The eight acceptance criteria, each at its stated tolerance and time budget.

Every test records a one-line verdict that is printed in the terminal summary
under "acceptance criteria".  Criterion 7 is reported but never fails the run.
"""

import time
import warnings

import numpy as np
import pytest

from imputeshap import impute
from imputeshap.config import parse_text
from imputeshap.data import DataMatrix, MaskedMatrix, apply_mcar
from imputeshap.datasets import load_bundled
from imputeshap.experiment import run
from imputeshap.model import GbtParams, LinearModel, fit_gbt, fit_linear
from imputeshap.rng import stream
from imputeshap.shapley import ValueFunction, exact_shapley, linear_shapley
from imputeshap.theory import COV_DELTA_TOL, cov_delta_sweep, vanishing_grid

QUIET_THEORY = "theory.seeds = 1\ntheory.grid = 0.2\ntheory.cov_cases = 5\n"


# 1 ---------------------------------------------------------------------------

def test_criterion_1_vanishing_attribution_grid(record_criterion):
    t0 = time.perf_counter()
    reports = vanishing_grid(seeds=range(5))
    elapsed = time.perf_counter() - t0
    worst_phi = max(r.max_abs_shap_on_imputed for r in reports)
    worst_imp = max(abs(r.importance_full - r.importance_observed_only) for r in reports)
    ok = len(reports) == 320 and worst_phi < 1e-10 and worst_imp < 1e-12 and elapsed < 10
    record_criterion(1, "imputed entries get zero attribution", ok,
                     f"{len(reports)} cases, max |phi| on imputed {worst_phi:.2e}, "
                     f"importance gap {worst_imp:.2e}", elapsed)
    assert ok


# 2 ---------------------------------------------------------------------------

def test_criterion_2_covariance_change(record_criterion):
    t0 = time.perf_counter()
    reports = cov_delta_sweep(1000, seed=0)
    elapsed = time.perf_counter() - t0
    worst = max(r.residual for r in reports)
    ok = len(reports) == 1000 and worst < COV_DELTA_TOL and elapsed < 1.0
    record_criterion(2, "one-point covariance change", ok, f"1000 cases, max residual {worst:.2e}", elapsed)
    assert ok


# 3 ---------------------------------------------------------------------------

class _Symmetrized:
    """Average of a model and the same model with columns i and j swapped."""

    accepts_missing = False

    def __init__(self, model, i, j):
        self.model, self.i, self.j = model, i, j

    def predict(self, X):
        Xs = X.copy()
        Xs[:, [self.i, self.j]] = X[:, [self.j, self.i]]
        return 0.5 * (self.model.predict(X) + self.model.predict(Xs))


def _axiom_case(model, p, rng, dummy):
    bg = rng.normal(size=(4, p))
    bg = np.vstack([bg, bg[:, ::-1]])  # closed under the swap used below
    row = rng.normal(size=p)
    vf = ValueFunction.marginal(bg)
    phi = exact_shapley(vf, model, row)
    gap = model.predict(row[None])[0] - model.predict(bg).mean()
    eff = abs(phi.sum() - gap)
    dum = abs(phi[dummy])
    # symmetry: a model symmetric in features 0 and p-1, explained at a row tied in both
    sym_model = _Symmetrized(model, 0, p - 1)
    row_s = row.copy()
    row_s[p - 1] = row_s[0]
    bg_s = bg.copy()
    bg_s[:, [0, p - 1]] = bg[:, [p - 1, 0]]
    phi_s = exact_shapley(ValueFunction.marginal(np.vstack([bg, bg_s])), sym_model, row_s)
    sym = abs(phi_s[0] - phi_s[p - 1])
    return eff, dum, sym


def test_criterion_3_axioms(record_criterion):
    t0 = time.perf_counter()
    worst = np.zeros(3)
    for k in range(100):
        rng = stream(3, "axioms-linear", k)
        p = int(rng.integers(2, 9))
        beta = rng.normal(size=p)
        dummy = int(rng.integers(p))
        beta[dummy] = 0.0
        model = LinearModel(float(rng.normal()), beta, rng.normal(size=p))
        worst = np.maximum(worst, _axiom_case(model, p, rng, dummy))
    for k in range(20):
        rng = stream(3, "axioms-gbt", k)
        p = int(rng.integers(2, 9))
        X = rng.normal(size=(80, p))
        dummy = int(rng.integers(p))
        y = np.delete(X, dummy, axis=1) @ rng.normal(size=p - 1) + 0.1 * rng.normal(size=80)
        model = fit_gbt(np.where(np.arange(p) == dummy, 0.0, X), y, GbtParams(n_trees=20, max_depth=3))
        assert dummy not in model.ensembles[0].used_features()
        worst = np.maximum(worst, _axiom_case(model, p, rng, dummy))
    elapsed = time.perf_counter() - t0
    ok = worst[0] < 1e-8 and worst[1] < 1e-12 and worst[2] < 1e-10 and elapsed < 30
    record_criterion(3, "efficiency, dummy, symmetry", ok,
                     f"100 linear + 20 GBT, max gaps {worst[0]:.2e} / {worst[1]:.2e} / {worst[2]:.2e}", elapsed)
    assert ok


# 4 ---------------------------------------------------------------------------

def test_criterion_4_linear_closed_form(record_criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(100):
        rng = stream(4, "linear-closed-form", k)
        p = int(rng.integers(1, 9))
        X = rng.normal(size=(50, p)) * rng.uniform(0.5, 3, size=p)
        model = fit_linear(X, X @ rng.normal(size=p) + rng.normal(size=50))
        row = rng.normal(size=p)
        exact = exact_shapley(ValueFunction.marginal(X.mean(axis=0)), model, row)
        worst = max(worst, float(np.abs(exact - linear_shapley(model, row)).max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 10
    record_criterion(4, "closed form equals enumeration", ok, f"100 models, max gap {worst:.2e}", elapsed)
    assert ok


# 5 ---------------------------------------------------------------------------

def _imputer_properties():
    data = load_bundled("diabetes_style")
    masked = apply_mcar(data, 0.3, 5)
    complete = MaskedMatrix(data, np.ones((data.n, data.p), bool))
    failures = []
    small = {"missforest": {"n_trees": 20, "max_sweeps": 4}}
    for method in sorted(impute.METHODS):
        spec = impute.ImputerSpec(method, small.get(method, {}), seed=1)
        _, out = impute.fit_transform(spec, masked)
        if not np.array_equal(out.values[masked.mask], masked.values[masked.mask]):
            failures.append(f"{method} changed observed cells")
        if method in ("mice", "missforest"):
            _, full = impute.fit_transform(spec, complete)
            if not np.array_equal(full.values, data.values):
                failures.append(f"{method} not the identity on complete data")
    _, mean_out = impute.fit_transform(impute.ImputerSpec("mean"), masked)
    for j in range(data.p):
        obs = masked.values[masked.mask[:, j], j]
        col = mean_out.values[:, j]
        if abs(col.mean() - obs.mean()) > 1e-12 * max(1.0, abs(obs.mean())):
            failures.append(f"mean moved in column {j}")
        if not np.var(col) < np.var(obs):
            failures.append(f"variance did not shrink in column {j}")
    _, soft = impute.fit_transform(impute.ImputerSpec("softimpute", {"shrinkage_ratio": 0.05}), masked)
    trace = np.array(soft.diagnostics["trace"])
    if np.any(np.diff(trace) > 1e-9 * np.abs(trace[:-1])):
        failures.append("SOFT-IMPUTE objective increased")
    rng = stream(5, "rank-one")
    X = rng.normal(size=(40, 1)) @ rng.normal(size=(1, 6))
    mask = rng.random(X.shape) >= 0.2
    mask[np.arange(6), np.arange(6)] = True
    low_rank = MaskedMatrix(DataMatrix(X, np.zeros(40), tuple("abcdef")), mask)
    _, rec = impute.fit_transform(impute.ImputerSpec(
        "softimpute", {"shrinkage_value": 0.0, "max_rank": 1, "tol": 1e-16, "max_iters": 5000}), low_rank)
    err = float(np.abs(rec.values - X).max())
    if err >= 1e-6:
        failures.append(f"rank-1 recovery error {err:.2e}")
    return failures, err


def test_criterion_5_imputer_properties(record_criterion):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", impute.ImputationWarning)
        failures, err = _imputer_properties()
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 60
    detail = "; ".join(failures) if failures else f"all hold, rank-1 error {err:.2e}"
    record_criterion(5, "imputer properties", ok, detail, elapsed)
    assert ok, failures


# 6 ---------------------------------------------------------------------------

def _non_decreasing_steps(values):
    return sum(b >= a for a, b in zip(values, values[1:]))


@pytest.mark.slow
def test_criterion_6_diabetes_trend(record_criterion, tmp_path):
    t0 = time.perf_counter()
    cfg = parse_text("datasets = diabetes_style\nrates = 0, 0.2, 0.4, 0.6, 0.8\nmethods = mean\n"
                     f"repetitions = 10\n{QUIET_THEORY}")
    report = run(cfg, tmp_path)
    elapsed = time.perf_counter() - t0
    series = {c: [x.value for x in report.cells if x.criteria == c] for c in ("mse", "mse_shap")}
    steps = {c: _non_decreasing_steps(v) for c, v in series.items()}
    ok = all(s >= 3 for s in steps.values()) and elapsed < 300
    detail = ", ".join(f"{c} rises in {steps[c]}/4 steps ({' '.join(f'{v:.4g}' for v in series[c])})"
                       for c in series)
    record_criterion(6, "Diabetes error grows with missing rate", ok, detail, elapsed)
    assert ok


# 7 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_7_glass_native_vs_imputation(record_criterion, tmp_path):
    t0 = time.perf_counter()
    cfg = parse_text(f"datasets = glass_style\nrates = 0.2, 0.4, 0.6\nrepetitions = 10\n{QUIET_THEORY}")
    report = run(cfg, tmp_path)
    elapsed = time.perf_counter() - t0
    per = {}
    for dataset, rate, method, crit, rep, seed, value in report.long_rows:
        if crit == "mse_shap":
            per.setdefault((rate, rep), {})[method] = value
    wins = {}
    for (rate, rep), vals in per.items():
        native = vals["gbt_native"]
        others = [v for m, v in vals.items() if m != "gbt_native"]
        wins.setdefault(rate, 0)
        wins[rate] += all(native > v for v in others)
    holds = all(w > cfg.repetitions / 2 for w in wins.values())
    detail = ", ".join(f"r={r:g}: native worst in {w}/{cfg.repetitions} seeds" for r, w in sorted(wins.items()))
    record_criterion(7, "Glass native-missing MSE-SHAP above imputation", holds, detail, elapsed, gated=False)


# 8 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_8_determinism(record_criterion, tmp_path):
    t0 = time.perf_counter()
    cfg = parse_text("datasets = diabetes_style, glass_style\nrates = 0.2, 0.6\nrepetitions = 2\n"
                     f"shapley.max_explain = 40\n{QUIET_THEORY}")
    outs = [run(cfg, tmp_path / name).output_dir for name in ("a", "b")]
    elapsed = time.perf_counter() - t0

    def snapshot(root):
        files = sorted([*root.glob("tables/*.csv"), *root.glob("shap/*.csv")])
        return {str(f.relative_to(root)): f.read_bytes() for f in files}

    a, b = map(snapshot, outs)
    differing = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    ok = bool(a) and not differing
    record_criterion(8, "byte-identical reruns", ok,
                     f"{len(a)} table and Shapley files compared, {len(differing)} differ", elapsed)
    assert ok, differing
