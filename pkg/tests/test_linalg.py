import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvdecomp.linalg import (
    RankDeficiencyError,
    gram_schmidt,
    mgs_qr,
    projection_matrix,
    projection_matrix_inverse,
    solve_normal_equations,
)
from cvdecomp.linreg import polynomial_design_matrix

X4 = np.array([0.20, 0.35, 0.60, 0.80])


def full_rank(seed, n, r):
    X = np.random.default_rng(seed).normal(size=(n, r))
    return X


designs = st.integers(1, 50).flatmap(
    lambda n: st.tuples(st.integers(0, 2**32 - 1), st.just(n), st.integers(1, n)))


def test_identity_columns_unchanged():
    np.testing.assert_allclose(gram_schmidt(np.eye(2)), np.eye(2), atol=0)


def test_single_column_normalized():
    np.testing.assert_allclose(gram_schmidt([[3.0], [4.0]])[:, 0], [0.6, 0.8], rtol=1e-15)


def test_two_column_design_orthonormal():
    W = gram_schmidt(polynomial_design_matrix(X4, 2))
    assert np.max(np.abs(W.T @ W - np.eye(2))) < 1e-12


def test_qr_reconstructs():
    X = full_rank(1, 8, 4)
    W, R = mgs_qr(X)
    np.testing.assert_allclose(W @ R, X, atol=1e-12)
    assert np.all(np.diag(R) > 0)
    np.testing.assert_array_equal(R, np.triu(R))


@pytest.mark.parametrize("X,col", [
    (np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]), 1),
    (np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.0, 0.0, 0.0]]), 2),
    (np.array([[0.0, 1.0], [0.0, 1.0]]), 0),
])
def test_rank_deficiency_names_column(X, col):
    with pytest.raises(RankDeficiencyError) as info:
        gram_schmidt(X)
    assert info.value.column == col


def test_more_columns_than_rows():
    with pytest.raises(RankDeficiencyError):
        projection_matrix(np.ones((2, 3)))


def test_rank_tolerance_is_scale_invariant():
    X = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-6], [1.0, 1.0]])
    W1 = gram_schmidt(X)
    W2 = gram_schmidt(X * 1e-200)
    np.testing.assert_allclose(W1, W2, atol=1e-8)


def test_projection_of_ones_column():
    P = projection_matrix(np.ones((4, 1)))
    np.testing.assert_allclose(P.matrix, np.full((4, 4), 0.25), atol=1e-15)
    assert P.rank == 1


def test_square_full_rank_projects_to_identity():
    P = projection_matrix(full_rank(3, 6, 6))
    np.testing.assert_allclose(P.matrix, np.eye(6), atol=1e-8)


def test_cubic_design_trace():
    P = projection_matrix(polynomial_design_matrix(X4, 4))
    assert abs(np.trace(P.matrix) - 4) < 1e-6


def test_solve_constant_fit():
    y = np.array([0.15, 0.85, 0.55, 0.75])
    np.testing.assert_allclose(solve_normal_equations(np.ones((4, 1)), y), [y.mean()], rtol=1e-14)


def test_solve_exact_fit():
    X = full_rank(4, 10, 3)
    y = X @ np.array([1.0, -2.0, 0.5])
    b = solve_normal_equations(X, y)
    assert np.linalg.norm(X @ b - y) < 1e-10


@settings(max_examples=60, deadline=None)
@given(designs)
def test_projection_invariants(design):
    seed, n, r = design
    X = full_rank(seed, n, r)
    P = projection_matrix(X).matrix
    assert np.max(np.abs(P - P.T)) <= 1e-10
    assert np.max(np.abs(P @ P - P)) <= 1e-8
    assert abs(np.trace(P) - r) <= 1e-6
    v = X @ np.random.default_rng(seed + 1).normal(size=r)
    np.testing.assert_allclose(P @ v, v, atol=1e-8 * (1 + np.abs(v).max()))


@settings(max_examples=60, deadline=None)
@given(designs)
def test_residual_orthogonal_to_column_space(design):
    seed, n, r = design
    g = np.random.default_rng(seed + 7)
    X = full_rank(seed, n, r)
    P = projection_matrix(X).matrix
    y, v = g.normal(size=n), g.normal(size=n)
    assert abs((P @ y - y) @ (P @ v)) <= 1e-8 * np.linalg.norm(y) * np.linalg.norm(v)


@settings(max_examples=60, deadline=None)
@given(designs)
def test_gram_schmidt_matches_inverse_route(design):
    seed, n, r = design
    X = full_rank(seed, n, r)
    np.testing.assert_allclose(projection_matrix(X).matrix, projection_matrix_inverse(X), atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(designs)
def test_solution_matches_projection_and_is_minimal(design):
    seed, n, r = design
    g = np.random.default_rng(seed + 3)
    X = full_rank(seed, n, r)
    y = g.normal(size=n)
    b = solve_normal_equations(X, y)
    np.testing.assert_allclose(X @ b, projection_matrix(X) @ y, atol=1e-8)
    best = np.linalg.norm(X @ b - y)
    for _ in range(5):
        assert np.linalg.norm(X @ (b + 1e-3 * g.normal(size=r)) - y) >= best - 1e-12
