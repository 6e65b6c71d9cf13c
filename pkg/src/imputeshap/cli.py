"""Command line entry point.

``imputeshap run <config>``       run the sweep, write tables/plots/exports
``imputeshap check <config>``     run the theory checks only
``imputeshap explain <model> <rows.csv>``  attributions for new rows

Exit codes: 0 success, 1 a theory check failed, 2 configuration or input error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, theory
from .config import ConfigError, load_config, validate
from .data import DataError
from .model import MissingInputError, load_model
from .shapley import ShapleyError, ValueFunction, explain_rows, write_shapley_csv

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("imputeshap")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="imputeshap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--output-dir", type=Path, default=None, help="where to write results")
        p.add_argument("--strict", action="store_true",
                       help="mark cells with all-missing rows unavailable instead of imputing them")
        p.add_argument("--jobs", type=int, default=None, metavar="N", help="worker processes")

    run = sub.add_parser("run", help="run the benchmark sweep")
    run.add_argument("config", type=Path)
    common(run)
    check = sub.add_parser("check", help="run the theory checks")
    check.add_argument("config", type=Path)
    common(check)
    ex = sub.add_parser("explain", help="explain rows with a saved model")
    ex.add_argument("model", type=Path)
    ex.add_argument("rows", type=Path)
    common(ex)
    return ap


def _cmd_run(args) -> int:
    from .experiment import run

    config = load_config(args.config)
    config = config.with_overrides(jobs=args.jobs, strict_all_missing_rows=True if args.strict else None)
    validate(config)
    report = run(config, args.output_dir)
    n_unavail = sum(not c.available for c in report.cells)
    print(f"wrote {report.output_dir}: {len(report.cells)} cells ({n_unavail} unavailable), "
          f"{len(report.exports)} exports, {len(report.plots)} plots")
    if not report.theory_passed:
        print("theory checks FAILED; see theory/checks.csv", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_check(args) -> int:
    config = load_config(args.config, require_datasets=False)
    th = config.theory
    rows = theory.run_checks(range(th.seeds), th.grid, th.cov_cases, config.base_seed)
    if args.output_dir is not None:
        args.output_dir.mkdir(parents=True, exist_ok=True)
        theory.write_check_rows(args.output_dir / "checks.csv", rows)
    by_check: dict[str, list] = {}
    for r in rows:
        by_check.setdefault(r.check, []).append(r)
    for name, rs in by_check.items():
        failed = sum(not r.passed for r in rs)
        worst = max(r.residual for r in rs)
        print(f"{name}: {len(rs) - failed}/{len(rs)} pass, max residual {worst:.3g}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK_FAILED


def read_rows(path: Path, feature_names) -> np.ndarray:
    """Rows CSV with a header naming every model feature; empty cells are missing."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        absent = [f for f in feature_names if f not in header]
        if absent:
            raise DataError(f"{path}: missing feature columns {absent}")
        cols = [header.index(f) for f in feature_names]
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                rows.append([float(rec[c]) if rec[c].strip() else math.nan for c in cols])
            except (ValueError, IndexError):
                raise DataError(f"{path}: row {lineno} is not numeric or is short") from None
    if not rows:
        raise DataError(f"{path}: no rows to explain")
    return np.array(rows, dtype=np.float64)


def _cmd_explain(args) -> int:
    try:
        model, doc = load_model(args.model)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load model {args.model}: {exc}") from None
    names = doc.get("feature_names")
    p = model.p if hasattr(model, "p") else model.n_features
    names = list(names) if names else [f"x{j}" for j in range(p)]
    X = read_rows(args.rows, names)
    bg = np.atleast_2d(np.asarray(doc.get("background", np.zeros(p)), dtype=np.float64))
    phi = explain_rows(model, X, background=bg, vf=ValueFunction.marginal(bg), feature_names=names,
                       missing_flags=np.isnan(X), groups=doc.get("groups"))
    if args.output_dir is not None:
        args.output_dir.mkdir(parents=True, exist_ok=True)
        write_shapley_csv(args.output_dir / "explain.csv", phi)
        print(f"wrote {args.output_dir / 'explain.csv'}")
    else:
        write_shapley_csv(sys.stdout, phi)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {"run": _cmd_run, "check": _cmd_check, "explain": _cmd_explain}
    try:
        return handlers[args.verb](args)
    except (ConfigError, DataError, MissingInputError, ShapleyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
