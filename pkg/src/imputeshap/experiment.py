"""The benchmark sweep: dataset x repetition x rate x method.

One work item is one (dataset, repetition).  It splits, standardizes, fits
the reference pipeline on complete data once, then for every rate masks
train and test and runs each arm.  Every arm draws from its own seeded
stream keyed by (repetition seed, dataset, rate, method), so adding or
removing a method leaves the other cells bit-identical.  Items may run in
worker processes; results are merged in key order, so the output bytes do
not depend on ``jobs``.
"""

from __future__ import annotations

import csv
import functools
import json
import platform
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, _kernels, impute, plots, theory
from .config import ConfigError, DatasetConfig, ExperimentConfig, RETRAIN_MAX_P, background_k, parse_groups
from .data import DataError, DataMatrix, MaskedMatrix, SplitSpec, Task, apply_mcar, fit_standardizer, load_csv, split
from .metrics import UNAVAILABLE, MetricCell, aggregate, imputation_mse, mse_shap, mse_shap_per_class, prediction_mse
from .model import GbtParams, fit_gbt, fit_linear, save_model
from .rng import RNG_VERSION, derive_seed, stream
from .shapley import ShapleyError, ShapleyMatrix, ValueFunction, ValueMode, explain_rows, write_shapley_csv

_CELL_ERRORS = (DataError, ShapleyError, ValueError, np.linalg.LinAlgError, FloatingPointError)


@dataclass(frozen=True)
class ArmOutput:
    phi: ShapleyMatrix
    model: Any
    background: np.ndarray
    groups: list | None


@dataclass
class ItemResult:
    dataset: str
    repetition: int
    seed: int
    values: dict = field(default_factory=dict)      # (rate, method, criteria) -> value
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    exports: dict = field(default_factory=dict)     # cell name -> ArmOutput (repetition 0 only)
    n_test: int = 0
    n_explained: int = 0


@dataclass
class ExperimentReport:
    cells: list[MetricCell]
    long_rows: list[tuple]
    exports: list[str]
    plots: list[str]
    theory_rows: list
    provenance: dict
    output_dir: Path

    @property
    def theory_passed(self) -> bool:
        return all(r.passed for r in self.theory_rows)


def rep_seed(config: ExperimentConfig, k: int) -> int:
    return derive_seed(config.base_seed, "repetition", k)


def cell_name(dataset: str, rate: float, method: str) -> str:
    return f"{dataset}_r{rate:g}_{method}"


def primary_criterion(task: str) -> str:
    return "mse" if task == Task.REGRESSION.value else "imputation_mse"


@functools.lru_cache(maxsize=8)
def _load(path: str, target: str, task: str) -> DataMatrix:
    return load_csv(path, target, task)


def load_dataset(d: DatasetConfig) -> DataMatrix:
    try:
        return _load(d.path, d.target, d.task)
    except OSError as exc:
        raise ConfigError(f"dataset {d.name!r}: cannot read {d.path}: {exc}") from None
    except DataError as exc:
        raise ConfigError(f"dataset {d.name!r}: {exc}") from None


def preflight(config: ExperimentConfig) -> None:
    """Load every dataset and check it fits the explanation budget."""
    for d in config.datasets:
        data = load_dataset(d)
        groups = parse_groups(d.groups, data.p)
        players = len(groups) if groups is not None else data.p
        if players > config.shapley.max_p:
            raise ConfigError(f"dataset {d.name!r}: {players} players exceed shapley.max_p="
                              f"{config.shapley.max_p}; set dataset.{d.name}.groups")
        if config.shapley.mode == ValueMode.RETRAIN.value and (groups is not None or data.p > RETRAIN_MAX_P):
            raise ConfigError(f"dataset {d.name!r}: retrain mode needs ungrouped p <= {RETRAIN_MAX_P}")
        if d.task == Task.CLASSIFICATION.value and data.n_classes < 2:
            raise ConfigError(f"dataset {d.name!r}: classification needs at least two classes")


class _Pipeline:
    """Shared state of one (dataset, repetition) item."""

    def __init__(self, config: ExperimentConfig, d: DatasetConfig, seed: int):
        self.config, self.d, self.seed = config, d, seed
        data = load_dataset(d)
        train, test = split(data, SplitSpec(config.test_fraction, derive_seed(seed, "split", d.name)))
        if config.standardize:
            sx = fit_standardizer(train)
            tx, ty = sx.transform(train.values), sx.transform(test.values)
            ytr, yte = train.target, test.target
            if d.task == Task.REGRESSION.value:
                sy = fit_standardizer(train.target)
                ytr = sy.transform(ytr)
                yte = sy.transform(yte)
            train, test = train.with_values(tx, ytr), test.with_values(ty, yte)
        self.train, self.test = train, test
        self.task = d.task
        self.n_classes = data.n_classes
        self.groups = parse_groups(d.groups, data.p)
        self.downstream = config.downstream_for(d.task)
        cap = config.shapley.max_explain
        self.m = test.n if cap == 0 else min(cap, test.n)
        self.bg_k = background_k(config.shapley.background)

    def fit(self, family: str, X: np.ndarray, y: np.ndarray):
        if family == "linear":
            return fit_linear(X, y)
        p = self.config.gbt
        params = GbtParams(p.n_trees, p.max_depth, p.learning_rate, p.min_samples_leaf, seed=self.seed)
        return fit_gbt(X, y, params, self.task, self.n_classes if self.task == Task.CLASSIFICATION.value else None)

    def background(self, X: np.ndarray, label: str) -> np.ndarray:
        if self.bg_k == 0:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                return np.nanmean(X, axis=0)[None, :]
        rows = stream(self.seed, "background", self.d.name, label).choice(
            X.shape[0], size=min(self.bg_k, X.shape[0]), replace=False)
        return X[np.sort(rows)]

    def explain(self, model, X_fit: np.ndarray, y_fit: np.ndarray, rows: np.ndarray, bg: np.ndarray,
                flags: np.ndarray, feature_values: np.ndarray, retrain_ok: bool) -> ShapleyMatrix:
        vf = None
        if self.config.shapley.mode == ValueMode.RETRAIN.value and retrain_ok:
            vf = ValueFunction.retrain(X_fit, y_fit)
        phi = explain_rows(model, rows, background=bg, vf=vf, feature_names=self.train.feature_names,
                           sample_ids=np.arange(rows.shape[0]), missing_flags=flags,
                           feature_values=feature_values, groups=self.groups)
        if phi.is_multiclass:
            phi = ShapleyMatrix(phi.values, phi.feature_names, phi.sample_ids, phi.missing_flags,
                                phi.feature_values, phi.base_values, tuple(range(self.n_classes)))
        return phi


def _metric_values(pipe: _Pipeline, criterion_value, phi: ShapleyMatrix, ref: ShapleyMatrix) -> dict:
    out = {primary_criterion(pipe.task): criterion_value, "mse_shap": mse_shap(phi, ref)}
    if pipe.config.per_class and phi.is_multiclass:
        for c, v in mse_shap_per_class(phi, ref).items():
            out[f"mse_shap_class{c}"] = v
    return out


def _run_arm(pipe: _Pipeline, method: str, rate: float, mtrain: MaskedMatrix, mtest: MaskedMatrix,
             ref: ShapleyMatrix) -> tuple[dict, ArmOutput, list]:
    m = pipe.m
    flags = ~mtest.mask[:m]
    y = pipe.train.target
    caught: list = []
    if method == "gbt_native":
        model = pipe.fit("gbt", mtrain.values, y)
        bg = pipe.background(mtrain.values, cell_name(pipe.d.name, rate, method))
        phi = pipe.explain(model, mtrain.values, y, mtest.values[:m], bg, flags, mtest.values[:m], False)
        if pipe.task == Task.REGRESSION.value:
            crit = prediction_mse(model.predict(mtest.values), pipe.test.target)
        else:
            crit = UNAVAILABLE
    else:
        spec = impute.ImputerSpec(method, pipe.config.imputers.get(method, {}),
                                  seed=derive_seed(pipe.seed, "impute", pipe.d.name, str(rate), method))
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always", impute.ImputationWarning)
            fitted, x_imp = impute.fit_transform(spec, mtrain)
            z_imp = impute.transform(fitted, mtest)
        caught = [str(x.message) for x in w if issubclass(x.category, impute.ImputationWarning)]
        model = pipe.fit(pipe.downstream, x_imp.values, y)
        bg = pipe.background(x_imp.values, cell_name(pipe.d.name, rate, method))
        phi = pipe.explain(model, x_imp.values, y, z_imp.values[:m], bg, flags, z_imp.values[:m], True)
        if pipe.task == Task.REGRESSION.value:
            crit = prediction_mse(model.predict(z_imp.values), pipe.test.target)
        else:
            crit = imputation_mse(z_imp, mtest)
    return _metric_values(pipe, crit, phi, ref), ArmOutput(phi, model, bg, pipe.groups), caught


def run_item(config: ExperimentConfig, d: DatasetConfig, k: int) -> ItemResult:
    seed = rep_seed(config, k)
    pipe = _Pipeline(config, d, seed)
    res = ItemResult(d.name, k, seed, n_test=pipe.test.n, n_explained=pipe.m)
    train, test = pipe.train, pipe.test
    ref_model = pipe.fit(pipe.downstream, train.values, train.target)
    ref_bg = pipe.background(train.values, "reference")
    ref = pipe.explain(ref_model, train.values, train.target, test.values[:pipe.m], ref_bg,
                       np.zeros((pipe.m, train.p), dtype=bool), test.values[:pipe.m], True)
    if k == 0:
        res.exports[f"{d.name}_reference"] = ArmOutput(ref, ref_model, ref_bg, pipe.groups)
    crit_names = [primary_criterion(pipe.task), "mse_shap"]
    for rate in config.rates:
        mtrain = apply_mcar(train, rate, derive_seed(seed, "mask-train", d.name, str(rate)))
        mtest = apply_mcar(test, rate, derive_seed(seed, "mask-test", d.name, str(rate)))
        empty_rows = mtrain.fully_missing_rows().size + mtest.fully_missing_rows().size
        for method in config.methods:
            if config.strict_all_missing_rows and empty_rows:
                res.failures.append((d.name, rate, method, k, f"strict: {empty_rows} rows with every feature missing"))
                for c in crit_names:
                    res.values[(rate, method, c)] = UNAVAILABLE
                continue
            try:
                vals, out, caught = _run_arm(pipe, method, rate, mtrain, mtest, ref)
            except _CELL_ERRORS as exc:
                res.failures.append((d.name, rate, method, k, f"{type(exc).__name__}: {exc}"))
                for c in crit_names:
                    res.values[(rate, method, c)] = UNAVAILABLE
                continue
            for msg in caught:
                res.notes.append((d.name, rate, method, k, msg))
            for c, v in vals.items():
                res.values[(rate, method, c)] = v
            if k == 0:
                res.exports[cell_name(d.name, rate, method)] = out
    return res


def _fmt(v) -> str:
    return "unavailable" if v is UNAVAILABLE else repr(float(v))


def _table_value(v) -> str:
    return "unavailable" if v is UNAVAILABLE else f"{v:.6g}"


def _class_label(config: ExperimentConfig, phi: ShapleyMatrix):
    if not phi.is_multiclass or config.shapley.class_label == "last":
        return None
    label = int(config.shapley.class_label)
    if label not in phi.class_labels:
        raise ConfigError(f"shapley.class={label} is not one of {phi.class_labels}")
    return label


def _criteria_order(names) -> list[str]:
    head = [c for c in ("mse", "imputation_mse", "mse_shap") if c in names]
    return head + sorted(set(names) - set(head), key=lambda c: (len(c), c))


def run(config: ExperimentConfig, output_dir: str | Path | None = None) -> ExperimentReport:
    """Run the full sweep and write every artifact under ``output_dir``."""
    preflight(config)
    out = Path(output_dir if output_dir is not None else config.output_dir)
    for sub in ("tables", "shap", "plots", "models", "theory"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    items = [(d, k) for d in config.datasets for k in range(config.repetitions)]
    if config.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(run_item, [config] * len(items), *zip(*items)))
    else:
        results = [run_item(config, d, k) for d, k in items]
    order = {d.name: i for i, d in enumerate(config.datasets)}
    results.sort(key=lambda r: (order[r.dataset], r.repetition))

    # aggregate
    cells, long_rows = [], []
    for d in config.datasets:
        reps = [r for r in results if r.dataset == d.name]
        criteria = _criteria_order({c for r in reps for (_, _, c) in r.values})
        for rate in config.rates:
            for c in criteria:
                for method in config.methods:
                    vals = [r.values.get((rate, method, c), UNAVAILABLE) for r in reps]
                    cells.append(aggregate(vals, d.name, rate, method, c))
                    for r, v in zip(reps, vals):
                        long_rows.append((d.name, rate, method, c, r.repetition, r.seed, v))
    _write_tables(out, config, cells, long_rows)

    # exports and plots from repetition 0
    exports, plot_files, models = [], [], []
    for r in (r for r in results if r.repetition == 0):
        d = next(x for x in config.datasets if x.name == r.dataset)
        for name, arm in r.exports.items():
            write_shapley_csv(out / "shap" / f"{name}.csv", arm.phi)
            exports.append(f"shap/{name}.csv")
            save_model(out / "models" / f"{name}.json", arm.model, background=arm.background,
                       feature_names=list(load_dataset(d).feature_names), groups=arm.groups,
                       task=d.task)
            models.append(f"models/{name}.json")
            if name.endswith("_reference"):
                continue
            label = _class_label(config, arm.phi)
            plots.write_bar(out / "plots" / f"{name}_bar.svg", arm.phi, label, title=f"{name}: mean |SHAP value|")
            plots.write_beeswarm(out / "plots" / f"{name}_beeswarm.svg", arm.phi, label, title=name,
                                 jitter_seed=config.jitter_seed)
            plot_files += [f"plots/{name}_bar.svg", f"plots/{name}_beeswarm.svg"]
        ref = r.exports[f"{d.name}_reference"].phi
        for rate in config.rates:
            arms = {"reference": ref}
            for method in config.methods:
                arm = r.exports.get(cell_name(d.name, rate, method))
                if arm is not None:
                    arms[method] = arm.phi
            if len(arms) > 1:
                fname = f"plots/{d.name}_r{rate:g}_comparison.svg"
                plots.write_comparison(out / fname, arms, _class_label(config, ref),
                                       title=f"{d.name}, r={rate:g}: mean |SHAP value|")
                plot_files.append(fname)

    th = config.theory
    theory_rows = theory.run_checks(range(th.seeds), th.grid, th.cov_cases, config.base_seed)
    theory.write_check_rows(out / "theory" / "checks.csv", theory_rows)

    provenance = _provenance(config, results, exports + models, plot_files, theory_rows)
    (out / "provenance.json").write_text(json.dumps(provenance, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return ExperimentReport(cells, long_rows, exports, plot_files, theory_rows, provenance, out)


def _write_tables(out: Path, config: ExperimentConfig, cells: list[MetricCell], long_rows: list[tuple]) -> None:
    methods = list(config.methods)
    with open(out / "tables" / "mse.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "r", "criteria", *methods])
        for i in range(0, len(cells), len(methods)):
            row = cells[i:i + len(methods)]
            w.writerow([row[0].dataset, f"{row[0].rate:g}", row[0].criteria, *(_table_value(c.value) for c in row)])
    with open(out / "tables" / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "r", "method", "criteria", "mean", "min", "max", "std", "repetitions"])
        for c in cells:
            w.writerow([c.dataset, f"{c.rate:g}", c.method, c.criteria, _fmt(c.value), _fmt(c.minimum),
                        _fmt(c.maximum), _fmt(c.std), c.n_repetitions])
    with open(out / "tables" / "long.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "r", "method", "criteria", "repetition", "seed", "value"])
        for ds, rate, method, c, k, seed, v in long_rows:
            w.writerow([ds, f"{rate:g}", method, c, k, seed, _fmt(v)])


def _provenance(config, results, exports, plot_files, theory_rows) -> dict:
    caps = {}
    for r in results:
        if r.repetition == 0:
            caps[r.dataset] = {"n_test": r.n_test, "explained": r.n_explained, "cap_binds": r.n_explained < r.n_test}
    return {
        "config_sha256": config.digest(),
        "config": json.loads(json.dumps(config.canonical(), default=str)),
        "seeds": [{"dataset": r.dataset, "repetition": r.repetition, "seed": r.seed} for r in results],
        "versions": {"imputeshap": __version__, "numpy": np.__version__, "python": platform.python_version(),
                     "rng": RNG_VERSION, "kernels": _kernels.BACKEND},
        "explain_cap": caps,
        "failures": [list(map(str, f)) for r in results for f in r.failures],
        "warnings": [list(map(str, f)) for r in results for f in r.notes],
        "artifacts": sorted(["tables/mse.csv", "tables/long.csv", "tables/summary.csv", "theory/checks.csv",
                             *exports, *plot_files]),
        "theory_checks": {"rows": len(theory_rows), "failed": sum(not r.passed for r in theory_rows)},
        "platform": sys.platform,
    }
