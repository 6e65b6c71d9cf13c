"""Experiment configuration: a flat ``key = value`` text file.

Lines starting with ``#`` or ``;`` are comments.  Lists are comma
separated.  Relative dataset paths resolve against the config file's
directory.  Keys (defaults in brackets):

``datasets``                 dataset names, comma separated (required)
``dataset.<name>.path``      CSV path [bundled table of that name]
``dataset.<name>.target``    target column [bundled default]
``dataset.<name>.task``      ``regression`` or ``classification`` [bundled default]
``dataset.<name>.groups``    ``none`` or ``blocks:<side>:<block>`` to explain image
                             tiles as single players [bundled default]
``rates``                    missing rates in [0, 1) [0.2, 0.4, 0.6, 0.8]
``methods``                  subset of gbt_native, mean, mice, dimv, missforest,
                             softimpute [all]
``downstream``               ``auto``, ``linear`` or ``gbt`` [auto: linear for
                             regression, gbt for classification]
``repetitions``              [10]
``base_seed``                [0]
``test_fraction``            [0.2]
``standardize``              [true]
``strict_all_missing_rows``  mark a cell unavailable when a masked row has no
                             observed entry [false]
``output_dir``               [results]
``jobs``                     worker processes [1]
``shapley.mode``             ``marginal_background`` or ``retrain`` [marginal_background]
``shapley.background``       ``train_mean`` or ``train_sample:<k>`` [train_mean]
``shapley.max_p``            most players allowed for exact enumeration [16]
``shapley.max_explain``      cap on explained test rows, 0 for all [0]
``shapley.class``            class shown in plots: ``last`` or a label [last]
``metrics.per_class``        also report per-class MSE-SHAP rows [false]
``plots.jitter_seed``        beeswarm jitter seed [0]
``gbt.<param>``              n_trees, max_depth, learning_rate, min_samples_leaf
``impute.<method>.<param>``  imputer hyperparameters
``theory.seeds``             seeds for the theory grid [5]
``theory.grid``              rates of the theory grid [0.1 .. 0.8]
``theory.cov_cases``         random covariance-delta cases [1000]
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from . import datasets as bundled
from . import impute
from .data import Task
from .model import GbtParams
from .shapley import MAX_PLAYERS, ValueMode

ARMS = ("gbt_native", "mean", "mice", "dimv", "missforest", "softimpute")
RETRAIN_MAX_P = 10
_SECTION = "config"


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    path: str
    target: str
    task: str
    groups: str = "none"


@dataclass(frozen=True)
class ShapleyConfig:
    mode: str = ValueMode.MARGINAL.value
    background: str = "train_mean"
    max_p: int = MAX_PLAYERS
    max_explain: int = 0
    class_label: str = "last"


@dataclass(frozen=True)
class TheoryConfig:
    seeds: int = 5
    grid: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    cov_cases: int = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetConfig, ...]
    rates: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)
    methods: tuple[str, ...] = ARMS
    downstream: str = "auto"
    repetitions: int = 10
    base_seed: int = 0
    test_fraction: float = 0.2
    standardize: bool = True
    strict_all_missing_rows: bool = False
    output_dir: str = "results"
    jobs: int = 1
    shapley: ShapleyConfig = field(default_factory=ShapleyConfig)
    per_class: bool = False
    jitter_seed: int = 0
    gbt: GbtParams = field(default_factory=GbtParams)
    imputers: dict = field(default_factory=dict)
    theory: TheoryConfig = field(default_factory=TheoryConfig)

    def downstream_for(self, task: str) -> str:
        if self.downstream != "auto":
            return self.downstream
        return "linear" if task == Task.REGRESSION.value else "gbt"

    def canonical(self) -> dict:
        """Everything that affects results (not output location or worker count)."""
        d = asdict(self)
        d.pop("output_dir")
        d.pop("jobs")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _num(key: str, text: str, kind=float):
    try:
        return kind(text.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {text!r}") from None


def _list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _hyper(text: str) -> Any:
    t = text.strip()
    if t.lower() in ("none", "null", ""):
        return None
    for kind in (int, float):
        try:
            return kind(t)
        except ValueError:
            pass
    return t


def parse_groups(spec: str, p: int):
    """``none`` -> None; ``blocks:<side>:<block>`` -> tile groups of a square image."""
    spec = spec.strip().lower()
    if spec in ("", "none"):
        return None
    parts = spec.split(":")
    if parts[0] != "blocks" or len(parts) != 3:
        raise ConfigError(f"unknown feature grouping {spec!r}")
    side, block = int(parts[1]), int(parts[2])
    if side * side != p or block < 1:
        raise ConfigError(f"grouping {spec!r} does not fit {p} features")
    return bundled.image_block_groups(side, block)


def parse_text(text: str, base_dir: Path | str = ".", require_datasets: bool = True) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",), strict=True)
    cp.optionxform = str
    try:
        cp.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    raw = dict(cp[_SECTION])
    used: set[str] = set()

    def get(key, default=None):
        if key in raw:
            used.add(key)
            return raw[key]
        return default

    base_dir = Path(base_dir)
    names = _list(get("datasets", ""))
    if not names and require_datasets:
        raise ConfigError("datasets: at least one dataset is required")
    ds = []
    for name in names:
        default_target, default_task = bundled.BUNDLED.get(name, (None, None))
        path = get(f"dataset.{name}.path")
        if path is None:
            if name not in bundled.BUNDLED:
                raise ConfigError(f"dataset {name!r}: no path given and no bundled table of that name")
            path = str(bundled.bundled_path(name))
        else:
            path = str((base_dir / path).resolve()) if not Path(path).is_absolute() else path
        target = get(f"dataset.{name}.target", default_target)
        task = get(f"dataset.{name}.task", default_task.value if default_task else None)
        if target is None or task is None:
            raise ConfigError(f"dataset {name!r}: target and task are required")
        if task not in (Task.REGRESSION.value, Task.CLASSIFICATION.value):
            raise ConfigError(f"dataset {name!r}: unknown task {task!r}")
        groups = get(f"dataset.{name}.groups", "blocks:6:2" if bundled.default_groups(name) else "none")
        ds.append(DatasetConfig(name, path, target, task, groups))

    cfg: dict[str, Any] = {"datasets": tuple(ds)}
    if (v := get("rates")) is not None:
        cfg["rates"] = tuple(_num("rates", t) for t in _list(v))
    if (v := get("methods")) is not None:
        cfg["methods"] = tuple(_list(v))
    for key, kind in (("repetitions", int), ("base_seed", int), ("jobs", int), ("test_fraction", float)):
        if (v := get(key)) is not None:
            cfg[key] = _num(key, v, kind)
    for key in ("standardize", "strict_all_missing_rows"):
        if (v := get(key)) is not None:
            cfg[key] = _bool(key, v)
    for key in ("downstream", "output_dir"):
        if (v := get(key)) is not None:
            cfg[key] = v.strip()
    if (v := get("metrics.per_class")) is not None:
        cfg["per_class"] = _bool("metrics.per_class", v)
    if (v := get("plots.jitter_seed")) is not None:
        cfg["jitter_seed"] = _num("plots.jitter_seed", v, int)

    sh = {}
    for key, attr, kind in (("shapley.mode", "mode", str), ("shapley.background", "background", str),
                            ("shapley.max_p", "max_p", int), ("shapley.max_explain", "max_explain", int),
                            ("shapley.class", "class_label", str)):
        if (v := get(key)) is not None:
            sh[attr] = v.strip() if kind is str else _num(key, v, kind)
    cfg["shapley"] = ShapleyConfig(**sh)

    gbt = {}
    for attr, kind in (("n_trees", int), ("max_depth", int), ("learning_rate", float), ("min_samples_leaf", int)):
        if (v := get(f"gbt.{attr}")) is not None:
            gbt[attr] = _num(f"gbt.{attr}", v, kind)
    try:
        cfg["gbt"] = GbtParams(**gbt)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    imputers: dict[str, dict] = {}
    for key in list(raw):
        if key.startswith("impute."):
            parts = key.split(".")
            if len(parts) != 3:
                raise ConfigError(f"{key}: expected impute.<method>.<parameter>")
            imputers.setdefault(parts[1], {})[parts[2]] = _hyper(get(key))
    cfg["imputers"] = imputers

    th = {}
    if (v := get("theory.seeds")) is not None:
        th["seeds"] = _num("theory.seeds", v, int)
    if (v := get("theory.grid")) is not None:
        th["grid"] = tuple(_num("theory.grid", t) for t in _list(v))
    if (v := get("theory.cov_cases")) is not None:
        th["cov_cases"] = _num("theory.cov_cases", v, int)
    cfg["theory"] = TheoryConfig(**th)

    unknown = sorted(set(raw) - used)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    config = ExperimentConfig(**cfg)
    validate(config)
    return config


def load_config(path, require_datasets: bool = True) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_text(text, path.parent, require_datasets)


def validate(config: ExperimentConfig) -> None:
    if not config.rates or any(not 0.0 <= r < 1.0 for r in config.rates):
        raise ConfigError(f"rates must be a non-empty subset of [0, 1), got {config.rates}")
    if len(set(config.rates)) != len(config.rates):
        raise ConfigError("rates must not repeat")
    if not config.methods:
        raise ConfigError("methods must be non-empty")
    bad = [m for m in config.methods if m not in ARMS]
    if bad or len(set(config.methods)) != len(config.methods):
        raise ConfigError(f"methods must be distinct entries of {ARMS}, got {config.methods}")
    if config.repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    if config.base_seed < 0:
        raise ConfigError("base_seed must be non-negative")
    if not 0.0 < config.test_fraction < 1.0:
        raise ConfigError("test_fraction must lie in (0, 1)")
    if config.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if config.downstream not in ("auto", "linear", "gbt"):
        raise ConfigError(f"downstream must be auto, linear or gbt, got {config.downstream!r}")
    sh = config.shapley
    if sh.mode not in (ValueMode.MARGINAL.value, ValueMode.RETRAIN.value):
        raise ConfigError(f"shapley.mode must be marginal_background or retrain, got {sh.mode!r}")
    if not 1 <= sh.max_p <= MAX_PLAYERS:
        raise ConfigError(f"shapley.max_p must lie in [1, {MAX_PLAYERS}]")
    if sh.max_explain < 0:
        raise ConfigError("shapley.max_explain must be >= 0")
    background_k(sh.background)
    if sh.class_label != "last":
        _num("shapley.class", sh.class_label, int)
    for d in config.datasets:
        down = config.downstream_for(d.task)
        if d.task == Task.CLASSIFICATION.value and down == "linear":
            raise ConfigError(f"dataset {d.name!r}: linear downstream cannot fit a classification target")
        if sh.mode == ValueMode.RETRAIN.value and down != "linear":
            raise ConfigError("shapley.mode=retrain is only supported for the linear downstream model")
    for method, hp in config.imputers.items():
        if method not in impute.METHODS:
            raise ConfigError(f"impute.{method}: unknown imputation method")
        try:
            impute.ImputerSpec(method, hp)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    th = config.theory
    if th.seeds < 1 or th.cov_cases < 0 or any(not 0.0 < r < 1.0 for r in th.grid):
        raise ConfigError("theory.seeds >= 1, theory.cov_cases >= 0 and theory.grid rates in (0, 1) required")


def background_k(spec: str) -> int:
    """0 for the train mean row, k for ``train_sample:<k>``."""
    if spec == "train_mean":
        return 0
    if spec.startswith("train_sample:"):
        k = _num("shapley.background", spec.split(":", 1)[1], int)
        if k >= 1:
            return k
    raise ConfigError(f"shapley.background must be train_mean or train_sample:<k>, got {spec!r}")
