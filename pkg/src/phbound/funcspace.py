import logging
from collections.abc import Sequence
from dataclasses import dataclass
from math import factorial
from typing import Any

import numpy as np
from numpy.polynomial import Polynomial

from phbound import matnum
from phbound.exceptions import (
    DimensionMismatchError,
    OutOfIntervalError,
    UnsupportedHamiltonianError,
)
from phbound.phs import PhsSystem, QSplit, boundary_block
from phbound.report import Verdict, VerificationReport
from phbound.typing import Interval, Vector
from phbound.utils import spawn_rngs

logger = logging.getLogger(__name__)

INTERVAL_SLACK = 1e-12

GREEN_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class PolyFunction:
    """Vector-valued polynomial on an interval, one numpy Polynomial per component."""

    components: tuple[Polynomial, ...]
    interval: Interval

    @classmethod
    def from_coefficients(
        cls, coeffs: Sequence[Sequence[float]], interval: Interval
    ) -> "PolyFunction":
        return cls(tuple(matnum.as_poly(c) for c in coeffs), interval)

    @classmethod
    def zero(cls, d: int, interval: Interval) -> "PolyFunction":
        return cls(tuple(Polynomial([0.0]) for _ in range(d)), interval)

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return max(c.degree() for c in self.components)

    def __call__(self, t: Any) -> np.ndarray:
        """Values at ``t``; shape ``(d,)`` for scalars, ``(d, len(t))`` otherwise."""
        return np.array([c(t) for c in self.components])

    def derivative(self, k: int = 1) -> "PolyFunction":
        return PolyFunction(tuple(c.deriv(k) for c in self.components), self.interval)

    def _check_compatible(self, other: "PolyFunction") -> None:
        if other.d != self.d or other.interval != self.interval:
            raise DimensionMismatchError(
                "polynomial function",
                (self.d, self.interval),
                (other.d, other.interval),
            )

    def __add__(self, other: "PolyFunction") -> "PolyFunction":
        self._check_compatible(other)
        return PolyFunction(
            tuple(
                matnum.as_poly(p + q)
                for p, q in zip(self.components, other.components, strict=True)
            ),
            self.interval,
        )

    def __sub__(self, other: "PolyFunction") -> "PolyFunction":
        return self + other * -1.0

    def __mul__(self, scalar: float) -> "PolyFunction":
        return PolyFunction(
            tuple(matnum.as_poly(c * scalar) for c in self.components), self.interval
        )

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class TraceVector:
    """Derivatives ``u(t), u'(t), ..., u^(n-1)(t)`` stacked derivative-major."""

    values: Vector
    n: int
    d: int

    def __post_init__(self) -> None:
        if self.values.shape != (self.n * self.d,):
            raise DimensionMismatchError(
                "trace vector", self.n * self.d, self.values.shape
            )

    def block(self, k: int) -> Vector:
        return self.values[k * self.d : (k + 1) * self.d]


def trace(u: PolyFunction, t: float, n: int) -> TraceVector:
    a, b = u.interval
    slack = INTERVAL_SLACK * max(1.0, abs(a), abs(b))
    if not a - slack <= t <= b + slack:
        raise OutOfIntervalError(t, u.interval)

    values = [c.deriv(k)(t) if k else c(t) for k in range(n) for c in u.components]
    return TraceVector(np.asarray(values, dtype=np.float64), n, u.d)


def _confluent_vandermonde(n: int) -> np.ndarray:
    """Hermite matrix on the reference interval [-1, 1].

    Rows are the derivatives of order ``0..n-1`` of the monomials ``s^j``,
    first at ``s = 1`` and then at ``s = -1``.
    """
    size = 2 * n
    mat = np.zeros((size, size))
    for block, s0 in enumerate((1.0, -1.0)):
        for k in range(n):
            row = block * n + k
            for j in range(k, size):
                mat[row, j] = factorial(j) // factorial(j - k) * s0 ** (j - k)
    return mat


def hermite_interpolate(
    tb: TraceVector, ta: TraceVector, n: int, d: int, interval: Interval
) -> PolyFunction:
    """Unique componentwise polynomial of degree <= 2n-1 with the given traces."""
    for tv in (tb, ta):
        if tv.values.shape != (n * d,):
            raise DimensionMismatchError("trace vector", n * d, tv.values.shape)

    a, b = interval
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    mat = _confluent_vandermonde(n)
    # Chain rule for s = (x - mid) / half.
    scale = np.tile(half ** np.arange(n), 2)
    to_global = Polynomial([-mid / half, 1.0 / half])

    components = []
    for i in range(d):
        rhs = scale * np.concatenate([tb.values[i::d], ta.values[i::d]])
        coeffs = matnum.solve(mat, rhs)
        components.append(matnum.as_poly(Polynomial(coeffs)(to_global)))

    return PolyFunction(tuple(components), interval)


def _require_polynomial_ham(sys: PhsSystem) -> np.ndarray:
    if not sys.ham.is_polynomial_on(sys.interval):
        raise UnsupportedHamiltonianError(
            "piecewise density with breakpoints inside "
            f"({sys.interval[0]}, {sys.interval[1]})"
        )
    return sys.ham.coefficients_on(sys.interval)


def _matrix_times(coeffs: np.ndarray, u: PolyFunction) -> PolyFunction:
    d = coeffs.shape[1]
    entries = [[matnum.as_poly(coeffs[:, i, j]) for j in range(d)] for i in range(d)]
    rows = []
    for i in range(d):
        row = Polynomial([0.0])
        for j in range(d):
            row = row + entries[i][j] * u.components[j]
        rows.append(matnum.as_poly(row))
    return PolyFunction(tuple(rows), u.interval)


def apply_hamiltonian(sys: PhsSystem, u: PolyFunction) -> PolyFunction:
    return _matrix_times(_require_polynomial_ham(sys), u)


def apply_a(sys: PhsSystem, u: PolyFunction) -> PolyFunction:
    w = apply_hamiltonian(sys, u)

    result = PolyFunction.zero(sys.d, u.interval)
    for k, pk in enumerate(sys.P):
        if not np.any(pk):
            continue
        result = result + _matrix_times(pk[np.newaxis, :, :], w.derivative(k))

    return result


def h_inner(sys: PhsSystem, u: PolyFunction, v: PolyFunction) -> float:
    """Weighted inner product ``int <H(x) u(x), v(x)> dx``, integrated exactly.

    Piecewise densities are integrated piece by piece.
    """
    u._check_compatible(v)

    a, b = sys.interval
    cuts = [a, *sys.ham.interior_breakpoints(sys.interval), b]
    ham_degree = max(piece.shape[0] - 1 for piece in sys.ham.pieces)
    rule_degree = u.degree + v.degree + ham_degree

    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:], strict=True):
        rule = matnum.QuadRule.for_degree(rule_degree, (lo, hi))
        weights = sys.ham.evaluate(rule.nodes)

        def integrand(xs: np.ndarray, weights: np.ndarray = weights) -> np.ndarray:
            return np.einsum("ix,xij,jx->x", u(xs), weights, v(xs))

        total += matnum.quad_integrate(integrand, rule)

    return total


def h_norm(sys: PhsSystem, u: PolyFunction) -> float:
    return float(np.sqrt(max(h_inner(sys, u, u), 0.0)))


def graph_norm(sys: PhsSystem, u: PolyFunction) -> float:
    au = apply_a(sys, u)
    return float(np.sqrt(max(h_inner(sys, u, u) + h_inner(sys, au, au), 0.0)))


def boundary_map(qs: QSplit, u: PolyFunction) -> tuple[Vector, Vector]:
    n = qs.nd // u.d
    a, b = u.interval
    tr_b = trace(u, b, n).values
    tr_a = trace(u, a, n).values
    f1 = qs.q_plus @ tr_b + qs.q_minus @ tr_a
    f2 = qs.q_minus @ tr_b + qs.q_plus @ tr_a
    return f1, f2


def greens_residual(
    sys: PhsSystem, qs: QSplit, u: PolyFunction, v: PolyFunction
) -> float:
    volume = h_inner(sys, apply_a(sys, u), v) + h_inner(sys, u, apply_a(sys, v))

    f1u, f2u = boundary_map(qs, apply_hamiltonian(sys, u))
    f1v, f2v = boundary_map(qs, apply_hamiltonian(sys, v))
    boundary = float(f1u @ f1v - f2u @ f2v)

    return abs(volume - boundary)


def boundary_lift(sys: PhsSystem, qs: QSplit, g1: Vector, g2: Vector) -> PolyFunction:
    """Polynomial ``u`` whose boundary data ``F(H u)`` is ``(g1, g2)``.

    The traces of ``w = H u`` are recovered from the boundary block and
    Hermite-interpolated, then ``u = H^-1 w``. Only constant densities keep
    ``u`` polynomial.
    """
    if not sys.ham.is_constant:
        raise UnsupportedHamiltonianError(
            "boundary lift needs a constant density to stay polynomial"
        )

    nd = qs.nd
    traces = matnum.solve(boundary_block(qs), np.concatenate([g1, g2]))
    tb = TraceVector(traces[:nd], sys.n, sys.d)
    ta = TraceVector(traces[nd:], sys.n, sys.d)
    w = hermite_interpolate(tb, ta, sys.n, sys.d, sys.interval)

    inverse = np.linalg.inv(sys.ham.coefficients_on(sys.interval)[0])
    return _matrix_times(inverse[np.newaxis, :, :], w)


def random_poly_function(
    rng: np.random.Generator, d: int, degree: int, interval: Interval
) -> PolyFunction:
    a, b = interval
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    to_local = Polynomial([-mid / half, 1.0 / half])
    return PolyFunction(
        tuple(
            matnum.as_poly(Polynomial(rng.uniform(-1.0, 1.0, degree + 1))(to_local))
            for _ in range(d)
        ),
        interval,
    )


def green_identity_check(
    sys: PhsSystem, qs: QSplit, pairs: int = 20, seed: int = 0
) -> VerificationReport:
    """Green's identity on random polynomial pairs of degree n + 3."""
    _require_polynomial_ham(sys)

    worst, worst_scaled = 0.0, 0.0
    witnesses: list[dict[str, Any]] = []
    for rng in spawn_rngs(seed, pairs):
        u = random_poly_function(rng, sys.d, sys.n + 3, sys.interval)
        v = random_poly_function(rng, sys.d, sys.n + 3, sys.interval)
        residual = greens_residual(sys, qs, u, v)
        scaled = residual / (1.0 + graph_norm(sys, u) * graph_norm(sys, v))
        worst = max(worst, residual)
        if scaled > worst_scaled:
            worst_scaled = scaled
            witnesses = [
                {
                    "u": [c.coef for c in u.components],
                    "v": [c.coef for c in v.components],
                }
            ]

    ok = worst_scaled <= GREEN_RTOL
    logger.info("Green identity over %s pairs: max residual %.3e", pairs, worst)
    return VerificationReport(
        verdict=Verdict.of(ok),
        criterion="green_identity",
        residuals={"max_residual": worst, "max_scaled_residual": worst_scaled},
        witnesses=witnesses if not ok else [],
        info={"pairs": pairs},
    )
