import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from phbound import matnum
from phbound.const import Q_EIGEN_RTOL, SYMMETRY_RTOL
from phbound.exceptions import (
    DegenerateError,
    DimensionMismatchError,
    InvalidSystemError,
    SingularQError,
)
from phbound.typing import Interval, Matrix
from phbound.utils import scaled_tol

logger = logging.getLogger(__name__)

# Nodes per sub-interval used when validating a Hamiltonian density.
VALIDATION_NODES = 12


@dataclass(frozen=True, eq=False)
class HamiltonianDensity:
    """Matrix-valued density, piecewise polynomial in the spatial variable.

    Each piece is stored as a coefficient stack of shape ``(degree + 1, d, d)``
    in the monomial basis of the global variable, lowest degree first.
    ``breakpoints`` holds the points where the pieces change.
    """

    pieces: tuple[np.ndarray, ...]
    breakpoints: tuple[float, ...] = ()
    lower_bound: float | None = None

    def __post_init__(self) -> None:
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise InvalidSystemError(
                f"Hamiltonian has {len(self.pieces)} pieces for "
                f"{len(self.breakpoints)} breakpoints"
            )
        if list(self.breakpoints) != sorted(set(self.breakpoints)):
            raise InvalidSystemError("Hamiltonian breakpoints must be increasing")

        dims = {piece.shape[1:] for piece in self.pieces}
        if len(dims) != 1 or any(
            piece.ndim != 3 or piece.shape[1] != piece.shape[2] for piece in self.pieces
        ):
            raise InvalidSystemError("Hamiltonian pieces must be square and equal size")

    @classmethod
    def identity(cls, d: int) -> "HamiltonianDensity":
        return cls.constant(np.eye(d))

    @classmethod
    def constant(
        cls, matrix: Any, lower_bound: float | None = None
    ) -> "HamiltonianDensity":
        mat = matnum.as_matrix(matrix, "Hamiltonian")
        return cls(pieces=(mat[np.newaxis, :, :],), lower_bound=lower_bound)

    @classmethod
    def polynomial(
        cls, coeffs: Sequence[Any], lower_bound: float | None = None
    ) -> "HamiltonianDensity":
        stack = np.stack([matnum.as_matrix(c, "Hamiltonian") for c in coeffs])
        return cls(pieces=(stack,), lower_bound=lower_bound)

    @classmethod
    def piecewise(
        cls,
        breakpoints: Sequence[float],
        pieces: Sequence[Sequence[Any]],
        lower_bound: float | None = None,
    ) -> "HamiltonianDensity":
        stacks = tuple(
            np.stack([matnum.as_matrix(c, "Hamiltonian") for c in piece])
            for piece in pieces
        )
        return cls(
            pieces=stacks,
            breakpoints=tuple(float(x) for x in breakpoints),
            lower_bound=lower_bound,
        )

    @property
    def dimension(self) -> int:
        return int(self.pieces[0].shape[1])

    @property
    def is_constant(self) -> bool:
        return len(self.pieces) == 1 and not np.any(self.pieces[0][1:])

    def interior_breakpoints(self, interval: Interval) -> list[float]:
        a, b = interval
        return [x for x in self.breakpoints if a < x < b]

    def is_polynomial_on(self, interval: Interval) -> bool:
        return not self.interior_breakpoints(interval)

    def coefficients_on(self, interval: Interval) -> np.ndarray:
        """Coefficient stack of the single piece covering ``interval``."""
        if not self.is_polynomial_on(interval):
            raise ValueError("Hamiltonian has interior breakpoints")
        return self.pieces[self._piece_index(0.5 * (interval[0] + interval[1]))]

    def _piece_index(self, x: float) -> int:
        return int(np.searchsorted(self.breakpoints, x, side="right"))

    def __call__(self, x: float) -> Matrix:
        stack = self.pieces[self._piece_index(x)]
        powers = x ** np.arange(stack.shape[0])
        return np.tensordot(powers, stack, axes=1)

    def evaluate(self, xs: Any) -> np.ndarray:
        """Values at every point of ``xs``, shape ``(len(xs), d, d)``."""
        return np.stack([self(float(x)) for x in np.atleast_1d(xs)])

    def validate(self, interval: Interval) -> float:
        """Check symmetry and coercivity on ``interval``, returning the bound c."""
        a, b = interval
        cuts = [a, *self.interior_breakpoints(interval), b]
        nodes = np.concatenate(
            [
                matnum.QuadRule.gauss_legendre(VALIDATION_NODES, (lo, hi)).nodes
                for lo, hi in zip(cuts[:-1], cuts[1:], strict=True)
            ]
            + [np.array([a, b])]
        )

        min_eig = np.inf
        for x in nodes:
            value = self(float(x))
            scale = matnum.norm(value)
            if np.max(np.abs(value - value.T)) > scaled_tol(SYMMETRY_RTOL, scale):
                raise InvalidSystemError(f"Hamiltonian is not symmetric at x={x}")
            eigenvalues, _ = matnum.sym_eig(value)
            min_eig = min(min_eig, float(eigenvalues[-1]))

        bound = self.lower_bound if self.lower_bound is not None else min_eig
        if bound <= 0.0:
            raise InvalidSystemError(
                f"Hamiltonian is not uniformly positive (bound {bound:.3e})"
            )
        if min_eig < bound * (1.0 - 1e-12):
            raise InvalidSystemError(
                f"Hamiltonian eigenvalue {min_eig:.6g} is below the lower "
                f"bound {bound:.6g}"
            )

        return bound


@dataclass(frozen=True, eq=False)
class PhsSystem:
    """Port-Hamiltonian operator ``u -> sum_k P_k d^k/dx^k (H u)``."""

    n: int
    d: int
    P: tuple[Matrix, ...]
    interval: Interval
    ham: HamiltonianDensity
    coercivity: float = field(init=False)

    def __post_init__(self) -> None:
        if self.n < 1 or self.d < 1:
            raise InvalidSystemError(
                f"Order and dimension must be positive (n={self.n}, d={self.d})"
            )

        a, b = self.interval
        if not a < b:
            raise InvalidSystemError(f"Invalid interval [{a}, {b}]")

        if len(self.P) != self.n + 1:
            raise InvalidSystemError(
                f"Expected {self.n + 1} coefficient matrices, got {len(self.P)}"
            )

        for k, pk in enumerate(self.P):
            if pk.shape != (self.d, self.d):
                raise DimensionMismatchError(f"P{k}", (self.d, self.d), pk.shape)
            if not np.all(np.isfinite(pk)):
                raise InvalidSystemError(f"P{k} has non-finite entries")

        check_symmetry_pattern(self.P)

        if self.n % 2 == 0 and self.d % 2 == 1:
            raise InvalidSystemError(
                f"P{self.n} must be skew-symmetric and invertible, which is "
                f"impossible for odd dimension d={self.d}"
            )
        if not matnum.is_invertible(self.P[self.n]):
            raise InvalidSystemError(f"P{self.n} is not invertible")

        if self.ham.dimension != self.d:
            raise DimensionMismatchError("Hamiltonian", self.d, self.ham.dimension)

        object.__setattr__(self, "coercivity", self.ham.validate(self.interval))

    @classmethod
    def create(
        cls,
        P: Sequence[Any],
        interval: Interval,
        ham: HamiltonianDensity | None = None,
    ) -> "PhsSystem":
        mats = tuple(matnum.as_matrix(pk, f"P{k}") for k, pk in enumerate(P))
        d = mats[0].shape[0]
        return cls(
            n=len(mats) - 1,
            d=d,
            P=mats,
            interval=(float(interval[0]), float(interval[1])),
            ham=ham if ham is not None else HamiltonianDensity.identity(d),
        )

    @classmethod
    def transport(
        cls, interval: Interval = (0.0, 1.0), ham: HamiltonianDensity | None = None
    ) -> "PhsSystem":
        return cls.create([[[0.0]], [[1.0]]], interval, ham)

    @classmethod
    def beam(
        cls, interval: Interval = (0.0, 1.0), ham: HamiltonianDensity | None = None
    ) -> "PhsSystem":
        zero = np.zeros((2, 2))
        return cls.create([zero, zero, [[0.0, 1.0], [-1.0, 0.0]]], interval, ham)

    @property
    def nd(self) -> int:
        return self.n * self.d

    def with_hamiltonian(self, ham: HamiltonianDensity) -> "PhsSystem":
        return PhsSystem(n=self.n, d=self.d, P=self.P, interval=self.interval, ham=ham)


def check_symmetry_pattern(P: Sequence[Matrix]) -> None:
    for k, pk in enumerate(P):
        sign = (-1) ** (k + 1)
        defect = float(np.max(np.abs(pk.T - sign * pk)))
        if defect > scaled_tol(SYMMETRY_RTOL, max(matnum.norm(pk), 1.0)):
            kind = "symmetric" if sign == 1 else "skew-symmetric"
            raise InvalidSystemError(f"P{k} must be {kind} (defect {defect:.3e})")


def random_system(
    rng: np.random.Generator,
    n: int,
    d: int,
    interval: Interval = (0.0, 1.0),
    ham: HamiltonianDensity | None = None,
) -> PhsSystem:
    """Random valid system with entries in [-2, 2]."""
    if n % 2 == 0 and d % 2 == 1:
        raise InvalidSystemError(f"No valid system exists for n={n}, d={d}")

    while True:
        P = []
        for k in range(n + 1):
            raw = rng.uniform(-2.0, 2.0, size=(d, d))
            P.append(0.5 * (raw + raw.T) if k % 2 == 1 else 0.5 * (raw - raw.T))
        if matnum.is_invertible(P[n]) and abs(np.linalg.det(P[n])) > 1e-3:
            return PhsSystem.create(P, interval, ham)


@dataclass(frozen=True, eq=False)
class QSplit:
    Q: Matrix
    q_plus: Matrix
    q_minus: Matrix
    basis_plus: Matrix
    basis_minus: Matrix

    @property
    def nd(self) -> int:
        return int(self.Q.shape[0])


def build_q(sys: PhsSystem) -> Matrix:
    check_symmetry_pattern(sys.P)

    n, d = sys.n, sys.d
    q = np.zeros((n * d, n * d))
    for i in range(1, n + 1):
        for j in range(1, n + 2 - i):
            block = (-1) ** (i + 1) * sys.P[i + j - 1]
            q[(i - 1) * d : i * d, (j - 1) * d : j * d] = block

    if np.max(np.abs(q - q.T)) > scaled_tol(SYMMETRY_RTOL, matnum.norm(q)):
        raise InvalidSystemError("Boundary form Q is not symmetric")

    return q


def split_q(q: Matrix) -> QSplit:
    eigenvalues, eigenvectors = matnum.sym_eig(q)

    smallest = float(np.min(np.abs(eigenvalues)))
    if smallest < Q_EIGEN_RTOL * matnum.norm(q):
        raise SingularQError(smallest)

    pos = eigenvalues > 0.0
    v_plus, v_minus = eigenvectors[:, pos], eigenvectors[:, ~pos]

    q_plus = (v_plus * np.sqrt(eigenvalues[pos])) @ v_plus.T
    q_minus = (v_minus * np.sqrt(-eigenvalues[~pos])) @ v_minus.T

    logger.debug(
        "Split Q into %s positive and %s negative directions",
        v_plus.shape[1],
        v_minus.shape[1],
    )

    return QSplit(
        Q=q,
        q_plus=q_plus,
        q_minus=q_minus,
        basis_plus=v_plus,
        basis_minus=v_minus,
    )


def boundary_block(qs: QSplit) -> Matrix:
    block = np.block([[qs.q_plus, qs.q_minus], [qs.q_minus, qs.q_plus]])
    if not matnum.is_invertible(block):
        raise DegenerateError()
    return block


def split_system(sys: PhsSystem) -> QSplit:
    return split_q(build_q(sys))
