import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imputeshap import impute
from imputeshap.data import DataMatrix, MaskedMatrix, apply_mcar
from imputeshap.model import fit_linear
from imputeshap.theory import (TheoryScopeError, check_vanishing_attribution, check_variance_shrink, cov_delta, pop_cov, pop_var,
                               run_checks, shap_mean_identity, synthetic_univariate, vanishing_grid)


def test_population_conventions():
    assert pop_var([0.0, 2.0]) == 1.0
    assert pop_cov([0.0, 2.0], [0.0, 2.0]) == 1.0


def test_cov_delta_two_points():
    rep = cov_delta([0.0, 2.0], [0.0, 2.0], 0)
    # x' = [2, 2], Cov drops from 1 to 0; (0 - 1)(2 - 0) / 2 = -1
    assert rep.direct_delta == pytest.approx(-1.0, abs=1e-15)
    assert rep.formula_delta == pytest.approx(-1.0, abs=1e-15)
    assert rep.passed


def test_cov_delta_three_points():
    rep = cov_delta([0.0, 2.0, 4.0], [1.0, 0.0, 2.0], 2)
    assert rep.direct_delta == pytest.approx(-1.0, abs=1e-15)
    assert rep.formula_delta == pytest.approx(-1.0, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(2, 60))
def test_cov_delta_identity(seed, n):
    g = np.random.default_rng(seed)
    rep = cov_delta(g.normal(size=n) * 3, g.normal(size=n), int(g.integers(n)))
    assert rep.residual < 1e-12


@pytest.mark.parametrize("args,exc", [(([1.0], [1.0], 0), ValueError), (([1.0, 2.0], [1.0], 0), ValueError),
                                      (([1.0, 2.0], [1.0, 2.0], 2), IndexError)])
def test_cov_delta_bad_input(args, exc):
    with pytest.raises(exc):
        cov_delta(*args)


def test_vanishing_single_case():
    train = apply_mcar(synthetic_univariate(200, 1), 0.3, 2)
    test = apply_mcar(synthetic_univariate(100, 3), 0.5, 4)
    rep = check_vanishing_attribution(train, test)
    assert rep.passed
    assert rep.max_abs_shap_on_imputed < 1e-10
    assert rep.n_obs_test == 50


def test_vanishing_fully_missing_test():
    train = apply_mcar(synthetic_univariate(50, 1), 0.2, 2)
    test = MaskedMatrix(synthetic_univariate(10, 3), np.zeros((10, 1), bool))
    rep = check_vanishing_attribution(train, test)
    assert rep.passed and rep.importance_full < 1e-10 and rep.n_obs_test == 0


def test_vanishing_scope_errors(regression_data):
    uni = apply_mcar(synthetic_univariate(30, 0), 0.2, 0)
    with pytest.raises(TheoryScopeError):
        check_vanishing_attribution(apply_mcar(regression_data, 0.2, 0), uni)
    with pytest.raises(TheoryScopeError):
        check_vanishing_attribution(uni, uni, imputer="mice")


def test_vanishing_grid_size():
    reports = vanishing_grid(seeds=[0])
    assert len(reports) == 64
    assert all(r.passed for r in reports)


def test_variance_shrink(masked_regression):
    _, imp = impute.fit_transform(impute.ImputerSpec("mean"), masked_regression)
    for j in range(masked_regression.p):
        assert check_variance_shrink(masked_regression, imp.values, column=j).passed


def test_variance_shrink_rejects_non_mean_fill():
    d = DataMatrix(np.array([[1.0], [2.0], [3.0]]), np.zeros(3), ("x",))
    m = MaskedMatrix(d, np.array([[True], [False], [True]]))
    with pytest.raises(TheoryScopeError):
        check_variance_shrink(m, np.array([1.0, 7.0, 3.0]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), shift=st.floats(-3, 3))
def test_shap_mean_identity(seed, shift):
    g = np.random.default_rng(seed)
    X = g.normal(size=(30, 3))
    model = fit_linear(X, g.normal(size=30))
    assert np.abs(shap_mean_identity(model, g.normal(size=(10, 3)) + shift)).max() < 1e-12


def test_run_checks_small():
    rows = run_checks(seeds=[0], grid=(0.2, 0.5), n_cov_cases=20)
    kinds = {r.check for r in rows}
    assert kinds == {"vanishing_attribution", "cov_delta", "variance_shrink", "shap_mean_identity"}
    assert all(r.passed for r in rows)
    assert sum(r.check == "vanishing_attribution" for r in rows) == 4
