import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imputeshap.model import GbtParams, MissingInputError, fit_gbt, fit_linear
from imputeshap.shapley import (MAX_PLAYERS, ShapleyError, ShapleyMatrix, ValueFunction, beeswarm_export,
                                coalition_values, coalition_weights, exact_shapley, explain_rows, global_importance,
                                linear_shapley, shapley_from_values, write_shapley_csv)


class Product:
    accepts_missing = False

    def predict(self, X):
        return X[:, 0] * X[:, 1]


class Fn:
    accepts_missing = False

    def __init__(self, f):
        self.f = f

    def predict(self, X):
        return self.f(X)


def test_product_game_splits_evenly():
    phi = exact_shapley(ValueFunction.marginal(np.zeros(2)), Product(), np.array([1.0, 1.0]))
    assert np.allclose(phi, [0.5, 0.5], atol=1e-14, rtol=0)


@pytest.mark.parametrize("p", [1, 2, 3, 5, 8, 16])
def test_weights_sum_to_one_over_subsets(p):
    w = coalition_weights(p)
    total = sum(math.comb(p - 1, s) * w[s] for s in range(p))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_weights_small_oracle():
    assert np.allclose(coalition_weights(3), [1 / 3, 1 / 6, 1 / 3], atol=1e-15)


def test_weights_need_a_player():
    with pytest.raises(ShapleyError):
        coalition_weights(0)


def _random_game(seed, p):
    return np.random.default_rng(seed).normal(size=1 << p)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), p=st.integers(1, 8))
def test_efficiency_on_arbitrary_games(seed, p):
    v = _random_game(seed, p)
    phi = shapley_from_values(v)[:, 0]
    assert phi.sum() == pytest.approx(v[-1] - v[0], abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), p=st.integers(2, 7), dummy=st.integers(0, 6))
def test_dummy_player_gets_zero(seed, p, dummy):
    dummy %= p
    base = np.random.default_rng(seed).normal(size=1 << p)
    masks = np.arange(1 << p)
    v = base[masks & ~(1 << dummy)]  # value ignores the dummy bit
    phi = shapley_from_values(v)[:, 0]
    assert abs(phi[dummy]) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), p=st.integers(2, 7))
def test_symmetric_players_are_equal(seed, p):
    # v depends on the coalition only through |S|
    h = np.random.default_rng(seed).normal(size=p + 1)
    v = np.array([h[bin(m).count("1")] for m in range(1 << p)])
    phi = shapley_from_values(v)[:, 0]
    assert np.allclose(phi, phi[0], atol=1e-12)


def test_table_length_must_be_power_of_two():
    with pytest.raises(ShapleyError):
        shapley_from_values(np.zeros(6))


def test_player_limit():
    with pytest.raises(ShapleyError):
        coalition_values(ValueFunction.marginal(np.zeros(MAX_PLAYERS + 1)), Product(), np.zeros(MAX_PLAYERS + 1))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), p=st.integers(1, 6))
def test_linear_closed_form_matches_enumeration(seed, p):
    g = np.random.default_rng(seed)
    X = g.normal(size=(20 + p, p))
    model = fit_linear(X, g.normal(size=20 + p))
    row = g.normal(size=p)
    exact = exact_shapley(ValueFunction.marginal(X.mean(axis=0)), model, row)
    assert np.allclose(exact, linear_shapley(model, row), atol=1e-10, rtol=0)


def test_linear_closed_form_oracle():
    model = fit_linear(np.array([[0.0], [2.0]]), np.array([1.0, 5.0]))
    assert linear_shapley(model, np.array([2.0]))[0] == pytest.approx(2.0)


def test_linear_rejects_missing():
    model = fit_linear(np.array([[0.0], [2.0]]), np.array([1.0, 5.0]))
    with pytest.raises(MissingInputError):
        linear_shapley(model, np.array([np.nan]))
    with pytest.raises(MissingInputError):
        exact_shapley(ValueFunction.marginal(np.zeros(1)), model, np.array([np.nan]))


def test_retrain_efficiency():
    g = np.random.default_rng(2)
    X = g.normal(size=(40, 3))
    y = X @ [1.0, -2.0, 0.5] + 0.1 * g.normal(size=40)
    row = g.normal(size=3)
    phi = exact_shapley(ValueFunction.retrain(X, y), None, row)
    full = fit_linear(X, y).predict(row[None, :])[0]
    assert phi.sum() == pytest.approx(full - y.mean(), abs=1e-10)


def test_retrain_independent_features_close_to_marginal():
    g = np.random.default_rng(5)
    X = g.normal(size=(4000, 2))
    y = X @ [1.5, -1.0]
    row = np.array([1.0, 1.0])
    phi = exact_shapley(ValueFunction.retrain(X, y), None, row)
    assert np.allclose(phi, (row - X.mean(axis=0)) * [1.5, -1.0], atol=0.05)


def test_groups_act_as_players():
    f = Fn(lambda X: X.sum(axis=1))
    phi = exact_shapley(ValueFunction.marginal(np.zeros(4)), f, np.array([1.0, 2.0, 3.0, 4.0]),
                        groups=[[0, 1], [2, 3]])
    assert np.allclose(phi, [3.0, 7.0], atol=1e-13, rtol=0)


def test_multiclass_efficiency():
    g = np.random.default_rng(0)
    X = g.normal(size=(50, 3))
    y = (X[:, 0] > 0).astype(float) + (X[:, 2] > 0)
    model = fit_gbt(X, y, GbtParams(n_trees=5), task="classification")
    bg = X.mean(axis=0)
    phi = exact_shapley(ValueFunction.marginal(bg), model, X[0])
    assert phi.shape == (3, 3)
    gap = model.predict(X[:1])[0] - model.predict(bg[None, :])[0]
    assert np.allclose(phi.sum(axis=0), gap, atol=1e-10)


def test_native_model_explains_missing_row():
    g = np.random.default_rng(0)
    X = g.normal(size=(60, 3))
    y = X[:, 0] - X[:, 1]
    X[::4, 1] = np.nan
    model = fit_gbt(X, y, GbtParams(n_trees=10))
    row = np.array([0.5, np.nan, -0.2])
    bg = np.nanmean(X, axis=0)
    phi = exact_shapley(ValueFunction.marginal(bg), model, row)
    assert phi.sum() == pytest.approx(model.predict(row[None])[0] - model.predict(bg[None])[0], abs=1e-10)


def test_explain_rows_base_plus_sum_is_prediction(regression_data):
    X, y = regression_data.values, regression_data.target
    model = fit_gbt(X, y, GbtParams(n_trees=10))
    sm = explain_rows(model, X[:5], background=X[:8])
    assert np.allclose(sm.base_values + sm.values.sum(axis=1), model.predict(X[:5]), atol=1e-10)


def test_explain_rows_grouped_names_and_flags():
    f = Fn(lambda X: X.sum(axis=1))
    flags = np.array([[True, False, False, False]])
    sm = explain_rows(f, np.ones((1, 4)), background=np.zeros(4), groups=[[0, 1], [2, 3]],
                      feature_names=list("abcd"), missing_flags=flags)
    assert sm.feature_names == ("a+b", "c+d")
    assert sm.missing_flags.tolist() == [[True, False]]


def _matrix(values, flags=None, fv=None):
    values = np.asarray(values, dtype=float)
    m, p = values.shape
    return ShapleyMatrix(values, tuple(f"x{j}" for j in range(p)), np.arange(m),
                         np.zeros((m, p), bool) if flags is None else flags, fv)


def test_global_importance_order_and_ties():
    gi = global_importance(_matrix([[1.0, -3.0, 1.0], [-1.0, 1.0, -1.0]]))
    assert gi.importance.tolist() == [1.0, 2.0, 1.0]
    assert gi.order.tolist() == [1, 0, 2]


def test_shapley_matrix_shape_checks():
    with pytest.raises(ShapleyError):
        ShapleyMatrix(np.zeros((2, 2)), ("a",), np.arange(2), np.zeros((2, 2), bool))


def test_beeswarm_export_colors_and_missing():
    fv = np.array([[0.0, 5.0], [10.0, 5.0], [5.0, 5.0]])
    flags = np.array([[False, False], [False, False], [True, False]])
    recs = beeswarm_export(_matrix([[1.0, 0.0], [2.0, 0.0], [0.0, 0.0]], flags, fv))
    assert [r.feature for r in recs[:3]] == ["x0"] * 3
    assert [r.color_value for r in recs[:2]] == [0.0, 1.0]
    assert recs[2].was_missing and math.isnan(recs[2].color_value)
    assert [r.color_value for r in recs[3:]] == [0.5] * 3


def test_shapley_csv_columns():
    sm = _matrix([[0.25, -1.0]], np.array([[False, True]]), np.array([[3.0, 0.0]]))
    buf = io.StringIO()
    write_shapley_csv(buf, sm)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["sample_id", "feature", "shap_value", "feature_value", "was_missing", "class"]
    assert rows[1] == ["0", "x0", "0.25", "3.0", "0", ""]
    assert rows[2] == ["0", "x1", "-1.0", "", "1", ""]


def test_shapley_csv_roundtrip_exact(tmp_path):
    vals = np.random.default_rng(0).normal(size=(3, 2))
    write_shapley_csv(tmp_path / "s.csv", _matrix(vals))
    with open(tmp_path / "s.csv") as fh:
        back = [float(r["shap_value"]) for r in csv.DictReader(fh)]
    assert back == vals.reshape(-1).tolist()
