import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvdecomp.linalg import RankDeficiencyError, projection_matrix
from cvdecomp.linreg import (
    PolynomialBasisSpec,
    aic_linear,
    analytic_instability_sq,
    cvc,
    fit,
    fit_polynomial,
    polynomial_design_matrix,
    training_error,
    upper_bound_norm,
)

# training SSE of polynomial fits with 1..4 terms on the four-point example
TABLE1_SSE = [0.2875, 0.1999, 0.1491, 0.0000]


def test_design_matrix_columns(four_points):
    D = polynomial_design_matrix(four_points.X, PolynomialBasisSpec(3))
    np.testing.assert_allclose(D[:, 2], [0.04, 0.1225, 0.36, 0.64], rtol=1e-14)
    np.testing.assert_array_equal(polynomial_design_matrix([3.0, 4.0], 1), [[1.0], [1.0]])
    np.testing.assert_array_equal(polynomial_design_matrix([3.0, 4.0], 2), [[1.0, 3.0], [1.0, 4.0]])
    with pytest.raises(ValueError):
        PolynomialBasisSpec(0)


def test_design_matrix_picks_input_column():
    X = np.array([[1.0, 2.0], [3.0, 5.0]])
    D = polynomial_design_matrix(X, PolynomialBasisSpec(3, input_index=1))
    np.testing.assert_array_equal(D, [[1, 2, 4], [1, 5, 25]])


@pytest.mark.parametrize("r,expected", list(enumerate(TABLE1_SSE, start=1)))
def test_table1_training_error(four_points, r, expected):
    model = fit_polynomial(four_points.X, four_points.y, r)
    err = training_error(model, four_points.X, four_points.y)
    assert err.sse == pytest.approx(expected, abs=1e-3)
    assert err.norm == pytest.approx(math.sqrt(err.sse))


def test_constant_fit_is_mean(four_points):
    model = fit_polynomial(four_points.X, four_points.y, 1)
    np.testing.assert_allclose(model.coefficients, [0.575], rtol=1e-14)


def test_cubic_interpolates(four_points):
    model = fit_polynomial(four_points.X, four_points.y, 4)
    assert training_error(model, four_points.X, four_points.y).sse < 1e-8
    np.testing.assert_allclose(model.predict(four_points.X), four_points.y, atol=1e-8)


def test_exact_linear_data_recovered():
    D = polynomial_design_matrix(np.linspace(0, 1, 7), 3)
    model = fit(D, 2.0 * D[:, 0])
    np.testing.assert_allclose(model.coefficients, [2, 0, 0], atol=1e-8)
    assert training_error(model, D, 2.0 * D[:, 0]).sse < 1e-10


def test_more_terms_than_points_rejected(four_points):
    with pytest.raises(RankDeficiencyError):
        fit_polynomial(four_points.X, four_points.y, 5)


def test_fitted_values_equal_projection(rng):
    D = rng.normal(size=(12, 4))
    y = rng.normal(size=12)
    np.testing.assert_allclose(fit(D, y).predict(D), projection_matrix(D) @ y, atol=1e-8)


def test_training_error_dimension_mismatch(four_points):
    model = fit_polynomial(four_points.X, four_points.y, 2)
    with pytest.raises(ValueError):
        training_error(model, four_points.X, np.zeros(3))


def test_instability_formula():
    assert analytic_instability_sq(1.0, 3) == 6.0
    assert analytic_instability_sq(0.0, 3) == 0.0
    s = 0.37
    assert analytic_instability_sq(s, 4) == pytest.approx(8 * s * s, rel=1e-15)
    assert upper_bound_norm(1.0, 2) == 2.0
    with pytest.raises(ValueError):
        analytic_instability_sq(-1.0, 2)


def test_cvc_values():
    # 0.1999 + 4 * 0.01
    assert cvc(0.1999, 0.1, 2) == pytest.approx(0.2399, abs=1e-12)
    s = 0.3
    assert cvc(0.0, s, 4) == pytest.approx(8 * s * s, rel=1e-15)
    assert cvc(0.42, 0.0, 3) == 0.42


def test_aic_degenerate_case():
    assert aic_linear(0.0, math.sqrt(1 / (2 * math.pi)), 1, 0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        aic_linear(1.0, 0.0, 3, 1)


@settings(max_examples=200)
@given(st.floats(0, 1e3), st.floats(1e-3, 1e2), st.integers(1, 500), st.integers(0, 50))
def test_aic_is_affine_in_cvc(sse, sigma, n, r):
    s2 = sigma * sigma
    a = aic_linear(sse, sigma, n, r)
    b = n * math.log(2 * math.pi * s2) + cvc(sse, sigma, r) / s2
    assert a == pytest.approx(b, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("sigma", [0.01, 0.1, 0.5, 1.0, 3.0])
def test_aic_and_cvc_rank_example_models_identically(four_points, sigma):
    sse = [training_error(fit_polynomial(four_points.X, four_points.y, r), four_points.X, four_points.y).sse
           for r in range(1, 5)]
    by_cvc = sorted(range(4), key=lambda i: cvc(sse[i], sigma, i + 1))
    by_aic = sorted(range(4), key=lambda i: aic_linear(sse[i], sigma, 4, i + 1))
    assert by_cvc == by_aic


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 30))
def test_adding_columns_never_increases_training_error(seed, n):
    g = np.random.default_rng(seed)
    X = g.normal(size=(n, n))
    y = g.normal(size=n)
    prev = math.inf
    for r in range(1, n + 1):
        sse = training_error(fit(X[:, :r], y), X[:, :r], y).sse
        assert sse <= prev + 1e-9 * (1 + np.dot(y, y))
        prev = sse
    assert prev < 1e-8 * (1 + np.dot(y, y))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 20), st.integers(1, 3))
def test_fit_invariant_under_reparameterization(seed, n, r):
    g = np.random.default_rng(seed)
    D = g.normal(size=(n, r))
    T = g.normal(size=(r, r)) + 3 * np.eye(r)
    y = g.normal(size=n)
    np.testing.assert_allclose(fit(D, y).predict(D), fit(D @ T, y).predict(D @ T), atol=1e-8)


def test_square_design_interpolates(rng):
    D = rng.normal(size=(6, 6))
    y = rng.normal(size=6)
    np.testing.assert_allclose(fit(D, y).predict(D), y, atol=1e-8)
