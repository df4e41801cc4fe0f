import logging
import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss

from phbound.const import (
    MAX_JACOBI_SWEEPS,
    PIVOT_RTOL,
    RANK_RTOL,
    SYMMETRY_RTOL,
)
from phbound.exceptions import (
    DimensionMismatchError,
    NoConvergenceError,
    NotSymmetricError,
    OutOfIntervalError,
    SingularMatrixError,
)
from phbound.typing import Interval, Matrix, Vector
from phbound.utils import scaled_tol

logger = logging.getLogger(__name__)


def as_matrix(value: Any, what: str = "matrix") -> Matrix:
    mat = np.atleast_2d(np.asarray(value, dtype=np.float64))
    if mat.ndim != 2 or 0 in mat.shape:
        raise DimensionMismatchError(what, "non-empty 2-D array", mat.shape)
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"{what} has non-finite entries")
    return mat


def as_poly(coeffs: Sequence[float] | Polynomial) -> Polynomial:
    """Monomial-basis polynomial, lowest degree first, trailing zeros trimmed."""
    if isinstance(coeffs, Polynomial):
        return coeffs.trim()
    if len(coeffs) == 0:
        return Polynomial([0.0])
    return Polynomial(np.asarray(coeffs, dtype=np.float64)).trim()


def norm(a: Matrix) -> float:
    return float(np.linalg.norm(a)) if a.size else 0.0


def sym_eig(s: Matrix) -> tuple[Vector, Matrix]:
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi sweeps.

    Eigenvalues are returned in descending order, with the eigenvectors as
    the columns of an orthogonal matrix.
    """
    s = as_matrix(s)
    if s.shape[0] != s.shape[1]:
        raise DimensionMismatchError("symmetric matrix", "square", s.shape)

    scale = norm(s)
    asym = float(np.max(np.abs(s - s.T)))
    tol = scaled_tol(SYMMETRY_RTOL, scale)
    if asym > tol:
        raise NotSymmetricError(asym, tol)

    size = s.shape[0]
    a = 0.5 * (s + s.T)
    v = np.eye(size)

    for sweep in range(MAX_JACOBI_SWEEPS):
        off = math.sqrt(max(float(np.sum(a * a) - np.sum(np.diag(a) ** 2)), 0.0))
        if off <= 1e-14 * scale or off == 0.0:
            logger.debug("Jacobi converged after %s sweeps", sweep)
            break

        for p in range(size - 1):
            for q in range(p + 1, size):
                apq = a[p, q]
                if apq == 0.0:
                    continue

                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - sn * col_q
                a[:, q] = sn * col_p + c * col_q

                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - sn * row_q
                a[q, :] = sn * row_p + c * row_q

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - sn * vec_q
                v[:, q] = sn * vec_p + c * vec_q
    else:
        raise NoConvergenceError(MAX_JACOBI_SWEEPS)

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]


def sqrt_psd(s: Matrix) -> Matrix:
    eigenvalues, eigenvectors = sym_eig(s)
    roots = np.sqrt(np.clip(eigenvalues, 0.0, None))
    return (eigenvectors * roots) @ eigenvectors.T


def spectral_norm(a: Matrix) -> float:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    if a.size == 0 or not np.any(a):
        return 0.0
    eigenvalues, _ = sym_eig(a.T @ a)
    return math.sqrt(max(float(eigenvalues[0]), 0.0))


def _lu(a: Matrix) -> tuple[tuple[Matrix, Any], float]:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError("coefficient matrix", "square", a.shape)

    tol = scaled_tol(PIVOT_RTOL, float(np.linalg.norm(a, np.inf)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a)

    pivot = float(np.min(np.abs(np.diag(lu))))
    if pivot < tol:
        raise SingularMatrixError(pivot, tol)

    return (lu, piv), pivot


def is_invertible(a: Matrix) -> bool:
    try:
        _lu(a)
    except SingularMatrixError:
        return False
    return True


def factorize(a: Matrix) -> tuple[Matrix, Any]:
    factors, _ = _lu(a)
    return factors


def solve_factored(factors: tuple[Matrix, Any], b: Vector | Matrix) -> Vector | Matrix:
    return scipy.linalg.lu_solve(factors, np.asarray(b, dtype=np.float64))


def solve(a: Matrix, b: Vector | Matrix) -> Vector | Matrix:
    """Solve ``a @ x = b`` by LU with partial pivoting.

    Raises SingularMatrixError when a pivot falls below the relative floor.
    """
    return solve_factored(factorize(a), b)


def rank(w: Matrix, rtol: float = RANK_RTOL) -> int:
    w = np.atleast_2d(np.asarray(w, dtype=np.float64))
    if w.size == 0:
        return 0
    _, r, _ = scipy.linalg.qr(w, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    return int(np.sum(diag > scaled_tol(rtol, norm(w))))


def null_space(c: Matrix) -> Matrix:
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    return scipy.linalg.null_space(c, rcond=RANK_RTOL)


@dataclass(frozen=True, eq=False)
class QuadRule:
    nodes: Vector
    weights: Vector
    interval: Interval

    def __post_init__(self) -> None:
        if self.nodes.shape != self.weights.shape:
            raise DimensionMismatchError(
                "weights", self.nodes.shape, self.weights.shape
            )
        if np.any(self.weights <= 0.0):
            raise ValueError("Quadrature weights must be positive")
        a, b = self.interval
        outside = (self.nodes < a) | (self.nodes > b)
        if np.any(outside):
            raise OutOfIntervalError(float(self.nodes[outside][0]), self.interval)

    @property
    def degree(self) -> int:
        return 2 * len(self.nodes) - 1

    @classmethod
    def gauss_legendre(cls, count: int, interval: Interval) -> "QuadRule":
        a, b = interval
        x, w = leggauss(count)
        half = 0.5 * (b - a)
        return cls(
            nodes=half * x + 0.5 * (a + b),
            weights=half * w,
            interval=(a, b),
        )

    @classmethod
    def for_degree(cls, degree: int, interval: Interval) -> "QuadRule":
        # Two nodes of slack on top of what the degree strictly needs.
        return cls.gauss_legendre(max(degree, 0) // 2 + 2, interval)


def quad_integrate(f: Callable[[Vector], Any], rule: QuadRule) -> float:
    """Apply the rule to ``f``, evaluated once on the whole node array."""
    values = np.asarray(f(rule.nodes), dtype=np.float64)
    values = np.broadcast_to(values, rule.nodes.shape)
    return float(np.dot(rule.weights, values))
