import math

import numpy as np
import pytest
import scipy.linalg

from phbound import matnum
from phbound.exceptions import (
    DimensionMismatchError,
    NotSymmetricError,
    OutOfIntervalError,
    SingularMatrixError,
)
from phbound.matnum import QuadRule

SQRT_HALF = math.sqrt(0.5)


def test_sym_eig_identity():
    eigenvalues, eigenvectors = matnum.sym_eig(np.eye(2))
    assert eigenvalues == pytest.approx([1.0, 1.0])
    assert np.allclose(np.abs(eigenvectors), np.eye(2))


def test_sym_eig_exchange_matrix():
    eigenvalues, eigenvectors = matnum.sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert eigenvalues == pytest.approx([1.0, -1.0])
    assert np.abs(eigenvectors[:, 0]) == pytest.approx([SQRT_HALF, SQRT_HALF])
    assert eigenvectors[0, 1] == pytest.approx(-eigenvectors[1, 1])


def test_sym_eig_diagonal():
    eigenvalues, eigenvectors = matnum.sym_eig(np.diag([2.0, -3.0]))
    assert eigenvalues == pytest.approx([2.0, -3.0])
    assert np.allclose(np.abs(eigenvectors), np.eye(2))


@pytest.mark.parametrize("size", [1, 3, 8, 24])
def test_sym_eig_reconstruction(size):
    rng = np.random.default_rng(size)
    raw = rng.uniform(-1.0, 1.0, (size, size))
    s = raw + raw.T

    eigenvalues, eigenvectors = matnum.sym_eig(s)

    rebuilt = (eigenvectors * eigenvalues) @ eigenvectors.T
    assert np.linalg.norm(rebuilt - s) <= 1e-9 * np.linalg.norm(s)
    assert np.allclose(eigenvectors.T @ eigenvectors, np.eye(size), atol=1e-10)
    assert np.all(np.diff(eigenvalues) <= 0.0)


def test_sym_eig_rejects_asymmetric_input():
    with pytest.raises(NotSymmetricError):
        matnum.sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_sym_eig_rejects_non_square_input():
    with pytest.raises(DimensionMismatchError):
        matnum.sym_eig(np.zeros((2, 3)))


@pytest.mark.parametrize(
    "matrix,expected",
    [
        (np.zeros((3, 3)), 0.0),
        (np.eye(4), 1.0),
        (np.array([[0.0, 2.0], [0.0, 0.0]]), 2.0),
        (np.array([[3.0, 0.0], [4.0, 0.0]]), 5.0),
    ],
)
def test_spectral_norm(matrix, expected):
    assert matnum.spectral_norm(matrix) == pytest.approx(expected)


def test_sqrt_psd():
    s = np.array([[2.0, 1.0], [1.0, 2.0]])
    root = matnum.sqrt_psd(s)
    assert root @ root == pytest.approx(s)


def test_solve():
    b = np.array([3.0, -1.0])
    assert matnum.solve(np.eye(2), b) == pytest.approx(b)
    assert matnum.solve(np.diag([2.0, 4.0]), [2.0, 4.0]) == pytest.approx([1.0, 1.0])


def test_solve_hilbert():
    hilbert = scipy.linalg.hilbert(3)
    x = matnum.solve(hilbert, hilbert.sum(axis=1))
    assert x == pytest.approx(np.ones(3))


def test_solve_singular_matrix():
    with pytest.raises(SingularMatrixError) as excinfo:
        matnum.solve(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 1.0])
    assert excinfo.value.pivot < excinfo.value.tolerance


def test_is_invertible():
    assert matnum.is_invertible(np.eye(3))
    assert not matnum.is_invertible(np.zeros((2, 2)))


def test_rank():
    assert matnum.rank(np.array([[1.0, 2.0], [2.0, 4.0]])) == 1
    assert matnum.rank(np.eye(3)) == 3
    assert matnum.rank(np.zeros((2, 4))) == 0


def test_null_space():
    c = np.array([[1.0, 1.0, 0.0]])
    z = matnum.null_space(c)
    assert z.shape == (3, 2)
    assert np.allclose(c @ z, 0.0)
    assert np.allclose(z.T @ z, np.eye(2))


def test_as_matrix():
    assert matnum.as_matrix(2.0).shape == (1, 1)
    with pytest.raises(ValueError):
        matnum.as_matrix([[np.nan]])


def test_quad_integrate_constant():
    rule = QuadRule.gauss_legendre(1, (0.0, 1.0))
    assert matnum.quad_integrate(lambda x: np.ones_like(x), rule) == pytest.approx(1.0)


def test_quad_integrate_two_nodes_exact_to_cubic():
    rule = QuadRule.gauss_legendre(2, (0.0, 1.0))
    assert rule.degree == 3
    assert matnum.quad_integrate(lambda x: x**2, rule) == pytest.approx(1.0 / 3.0)


def test_quad_integrate_odd_function():
    rule = QuadRule.gauss_legendre(4, (-1.0, 1.0))
    assert matnum.quad_integrate(lambda x: x**5, rule) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("degree", [0, 3, 10, 21])
def test_quad_rule_for_degree(degree):
    rule = QuadRule.for_degree(degree, (0.0, 2.0))
    assert rule.degree >= degree
    exact = 2.0 ** (degree + 1) / (degree + 1)
    assert matnum.quad_integrate(lambda x: x**degree, rule) == pytest.approx(exact)


def test_quad_rule_invalid_weights():
    with pytest.raises(ValueError):
        QuadRule(np.array([0.0, 1.0]), np.array([1.0, -1.0]), (0.0, 1.0))


@pytest.mark.parametrize("nodes", [[-0.1, 0.5], [0.5, 1.2]])
def test_quad_rule_nodes_outside_interval(nodes):
    with pytest.raises(OutOfIntervalError, match="outside of"):
        QuadRule(np.array(nodes), np.array([0.5, 0.5]), (0.0, 1.0))
