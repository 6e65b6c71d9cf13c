import xml.etree.ElementTree as ET

import numpy as np
import pytest

from imputeshap import impute
from imputeshap.data import apply_mcar
from imputeshap.model import fit_linear
from imputeshap.plots import (MISSING_FILL, beeswarm_svg, color_for, comparison_svg, fmt_number, importance_bar_svg,
                              write_bar, write_beeswarm)
from imputeshap.shapley import ShapleyMatrix, explain_rows, global_importance
from imputeshap.theory import synthetic_univariate

NS = "{http://www.w3.org/2000/svg}"


def parse(svg):
    return ET.fromstring(svg.split("\n", 1)[1])


def sm(values, flags=None, fv=None):
    v = np.asarray(values, dtype=float)
    m, p = v.shape
    return ShapleyMatrix(v, tuple(f"f{j}" for j in range(p)), np.arange(m),
                         np.zeros((m, p), bool) if flags is None else flags, v if fv is None else fv)


@pytest.mark.parametrize("v,s", [(1.0, "1.0"), (0.5, "0.5"), (0.1234, "0.123"), (2.0004, "2.0"), (0.0, "0.0"),
                                 (-1.25, "-1.25")])
def test_fmt_number(v, s):
    assert fmt_number(v) == s


def test_bar_value_labels_and_order():
    root = parse(importance_bar_svg(global_importance(sm([[1.0, -2.0, 0.5]]))))
    groups = root.findall(f"{NS}g")
    assert [g.get("data-feature") for g in groups] == ["f1", "f0", "f2"]
    labels = [g.find(f"{NS}text[@class='value']").text for g in groups]
    assert labels == ["2.0", "1.0", "0.5"]


def test_bar_ties_keep_feature_order():
    root = parse(importance_bar_svg(global_importance(sm([[1.0, 1.0, 1.0]]))))
    assert [g.get("data-feature") for g in root.findall(f"{NS}g")] == ["f0", "f1", "f2"]


def test_eight_bars_monotone_widths():
    vals = np.random.default_rng(0).normal(size=(5, 8))
    root = parse(importance_bar_svg(global_importance(sm(vals))))
    widths = [float(r.get("width")) for r in root.iter(f"{NS}rect") if r.get("class") == "bar"]
    assert len(widths) == 8
    assert all(a >= b for a, b in zip(widths, widths[1:]))


def test_beeswarm_zero_values_on_zero_line():
    svg = beeswarm_svg(sm([[0.0, 1.0], [0.0, -1.0]]))
    root = parse(svg)
    x0 = float(root.find(f"{NS}line[@class='zero']").get("data-x"))
    dots = [c for c in root.iter(f"{NS}circle") if float(c.get("data-shap")) == 0.0]
    assert len(dots) == 2
    assert all(float(c.get("cx")) == x0 for c in dots)


def test_beeswarm_missing_dots_gray():
    flags = np.array([[True, False], [False, False]])
    root = parse(beeswarm_svg(sm([[0.3, 1.0], [0.1, -1.0]], flags)))
    missing = [c for c in root.iter(f"{NS}circle") if c.get("class") == "missing"]
    assert len(missing) == 1
    assert missing[0].get("fill") == MISSING_FILL
    assert missing[0].get("data-sample") == "0"


def test_beeswarm_one_dot_per_entry():
    root = parse(beeswarm_svg(sm(np.random.default_rng(1).normal(size=(30, 3)))))
    assert len(list(root.iter(f"{NS}circle"))) == 90


def test_mean_imputed_entries_sit_on_zero_line():
    train = apply_mcar(synthetic_univariate(100, 0), 0.3, 1)
    test = apply_mcar(synthetic_univariate(40, 2), 0.4, 3)
    fitted, x_imp = impute.fit_transform(impute.ImputerSpec("mean"), train)
    model = fit_linear(x_imp.values, train.target)
    z = impute.transform(fitted, test)
    phi = explain_rows(model, z.values, missing_flags=~test.mask, feature_names=["x"])
    root = parse(beeswarm_svg(phi))
    x0 = float(root.find(f"{NS}line[@class='zero']").get("data-x"))
    gray = [c for c in root.iter(f"{NS}circle") if c.get("class") == "missing"]
    assert len(gray) == 16
    assert all(abs(float(c.get("cx")) - x0) < 0.01 for c in gray)
    assert all(c.get("fill") == MISSING_FILL for c in gray)


def test_color_scale_ends():
    assert color_for(0.0) == "#008bfb"
    assert color_for(1.0) == "#ff0052"
    assert color_for(float("nan")) == MISSING_FILL


def test_svg_bytes_deterministic(tmp_path):
    phi = sm(np.random.default_rng(3).normal(size=(200, 4)))
    write_beeswarm(tmp_path / "a.svg", phi, jitter_seed=5)
    write_beeswarm(tmp_path / "b.svg", phi, jitter_seed=5)
    write_bar(tmp_path / "c.svg", phi)
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    parse((tmp_path / "c.svg").read_text())


def test_comparison_panel():
    a = global_importance(sm([[1.0, 2.0]]))
    b = global_importance(sm([[3.0, 0.0]]))
    root = parse(comparison_svg({"reference": a, "mean": b}))
    bars = [r for r in root.iter(f"{NS}rect") if r.get("class") == "bar"]
    assert [(r.get("data-arm"), float(r.get("data-value"))) for r in bars] == [
        ("reference", 2.0), ("mean", 0.0), ("reference", 1.0), ("mean", 3.0)]


def test_comparison_needs_matching_features():
    a = global_importance(sm([[1.0, 2.0]]))
    b = global_importance(sm([[1.0, 2.0, 3.0]]))
    with pytest.raises(ValueError):
        comparison_svg({"a": a, "b": b})
