"""Collocation discretization of the port-Hamiltonian operator.

States are grid vectors laid out node-major, component-minor: entry
``j * d + c`` is component ``c`` at node ``j``. The Gram matrix ``G`` is
``blockdiag(w_j H(x_j))`` on Legendre nodes, so that ``u @ G @ v`` approximates
the weighted inner product. Chebyshev nodes use the exact mass matrix of the
Lagrange basis instead, ``G = M kron H``, which restricts them to constant
densities. Both choices reproduce the boundary form exactly in ``u @ G @ A_h u``.

Linear boundary conditions are imposed exactly: the collocation equations are
tested against the constraint null space. Nonlinear conditions ``g(F1 u) =
F2 u`` are imposed weakly with the penalty ``G^-1 F2^T (F2 u - g(F1 u))``,
which keeps the discrete resolvent a contraction for every 1-Lipschitz g.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, NamedTuple

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.special
from numpy.polynomial import Chebyshev, Legendre, Polynomial
from numpy.polynomial.legendre import legvander

from phbound import matnum
from phbound.bcspec import (
    BoundaryCondition,
    BoundaryMap,
    KernelW,
    LinearM,
    check_dimensions,
)
from phbound.config import config
from phbound.const import (
    ACCRETIVE_TOL_FACTOR,
    FIXED_POINT_MAX_ITER,
    FIXED_POINT_TOL,
    LIPSCHITZ_MARGIN,
    MAX_ORACLE_LENGTH,
    RESOLVENT_MARGIN,
    TAYLOR_DEGREE,
)
from phbound.exceptions import (
    ConstructionFailedError,
    DimensionMismatchError,
    GridTooCoarseError,
    NotConvergedError,
    SingularMatrixError,
    SingularSystemError,
    UnsupportedHamiltonianError,
)
from phbound.funcspace import PolyFunction
from phbound.phs import PhsSystem, QSplit
from phbound.report import Verdict, VerificationReport
from phbound.typing import Interval, Matrix, Vector
from phbound.utils import make_rng, spawn_rngs

logger = logging.getLogger(__name__)

DEFAULT_MUS = (0.1, 1.0, 10.0)
DEFAULT_PAIRS = 20
SMOOTH_DEGREE = 6
SPREAD_TOL = 1e-6


class NodeFamily(str, Enum):
    LEGENDRE = "legendre"
    CHEBYSHEV = "chebyshev"


class AccretivityMode(str, Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"
    AUTO = "auto"


def _legendre_lobatto(count: int) -> tuple[Vector, Vector]:
    interior = Legendre.basis(count - 1).deriv().roots()
    nodes = np.concatenate([[-1.0], np.sort(np.real(interior)), [1.0]])
    values = Legendre.basis(count - 1)(nodes)
    weights = 2.0 / (count * (count - 1) * values**2)
    return nodes, weights


def _chebyshev_lobatto(count: int) -> tuple[Vector, Vector]:
    """Chebyshev extreme points with Clenshaw-Curtis weights."""
    n = count - 1
    theta = np.pi * np.arange(count) / n
    weights = np.zeros(count)
    inner = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        weights[0] = weights[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(n * theta[inner]) / (n * n - 1)
    else:
        weights[0] = weights[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    weights[inner] = 2.0 * v / n
    return -np.cos(theta), weights


def mass_matrix(nodes: Vector) -> Matrix:
    """Exact ``int l_i l_j`` over [-1, 1] for the Lagrange basis on ``nodes``."""
    count = len(nodes)
    coeffs = np.linalg.inv(legvander(nodes, count - 1))
    norms = 2.0 / (2.0 * np.arange(count) + 1.0)
    mass = coeffs.T @ (norms[:, np.newaxis] * coeffs)
    return 0.5 * (mass + mass.T)


def differentiation_matrix(nodes: Vector) -> Matrix:
    """Derivative of the polynomial interpolant, from barycentric weights."""
    diff = nodes[:, np.newaxis] - nodes[np.newaxis, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / np.prod(diff, axis=1)
    dmat = (bary[np.newaxis, :] / bary[:, np.newaxis]) / diff
    np.fill_diagonal(dmat, 0.0)
    np.fill_diagonal(dmat, -dmat.sum(axis=1))
    return dmat


@dataclass(frozen=True, eq=False)
class CollocationGrid:
    N: int
    nodes: Vector
    D: Matrix
    weights: Vector
    mass: Matrix
    interval: Interval
    family: NodeFamily = NodeFamily.LEGENDRE

    @classmethod
    def create(
        cls, N: int, interval: Interval, family: NodeFamily = NodeFamily.LEGENDRE
    ) -> "CollocationGrid":
        if N < 2:
            raise GridTooCoarseError(N, 2)

        match family:
            case NodeFamily.LEGENDRE:
                ref_nodes, ref_weights = _legendre_lobatto(N)
                ref_mass = np.diag(ref_weights)
            case NodeFamily.CHEBYSHEV:
                ref_nodes, ref_weights = _chebyshev_lobatto(N)
                ref_mass = mass_matrix(ref_nodes)

        a, b = interval
        half = 0.5 * (b - a)
        return cls(
            N=N,
            nodes=0.5 * (a + b) + half * ref_nodes,
            D=differentiation_matrix(ref_nodes) / half,
            weights=half * ref_weights,
            mass=half * ref_mass,
            interval=(a, b),
            family=family,
        )


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    grid: CollocationGrid
    sys: PhsSystem
    qs: QSplit
    bc: BoundaryCondition
    A_h: Matrix
    G: Matrix
    H: Matrix
    trace_a: Matrix
    trace_b: Matrix
    F1: Matrix
    F2: Matrix
    C: Matrix | None
    kernel: Matrix | None
    penalty: Matrix
    _cache: dict[tuple[str, float], Any] = field(
        default_factory=dict, init=False, repr=False
    )

    @property
    def size(self) -> int:
        return self.grid.N * self.sys.d

    @property
    def is_linear(self) -> bool:
        return self.C is not None

    def sample(self, u: PolyFunction) -> Vector:
        if u.d != self.sys.d:
            raise DimensionMismatchError("grid function", self.sys.d, u.d)
        return np.asarray(u(self.grid.nodes)).T.ravel()

    def values(self, u: Vector) -> Matrix:
        """Grid vector as a ``(N, d)`` array."""
        return np.reshape(u, (self.grid.N, self.sys.d))

    def inner(self, u: Vector, v: Vector) -> float:
        return float(u @ self.G @ v)

    def norm(self, u: Vector) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))

    def boundary_data(self, u: Vector) -> tuple[Vector, Vector]:
        return self.F1 @ u, self.F2 @ u

    def flux(self, u: Vector) -> float:
        f1, f2 = self.boundary_data(u)
        return float(f1 @ f1 - f2 @ f2)

    def boundary_map(self) -> BoundaryMap:
        return self.bc.as_map(self.qs)

    def constraint_residual(self, u: Vector) -> Vector:
        if self.C is not None:
            return self.C @ u
        f1, f2 = self.boundary_data(u)
        return np.asarray(self.boundary_map()(f1)) - f2

    def apply_b(self, u: Vector) -> Vector:
        """The discrete restriction; nonlinear conditions add their penalty."""
        if self.is_linear:
            return self.A_h @ u
        f1, f2 = self.boundary_data(u)
        return self.A_h @ u + self.penalty @ (f2 - self.boundary_map()(f1))


def _constraint(
    bc: BoundaryCondition, f1: Matrix, f2: Matrix, trace_b: Matrix, trace_a: Matrix
) -> Matrix | None:
    match bc:
        case LinearM(M=m):
            return m @ f1 - f2
        case KernelW(W=w):
            return w @ np.vstack([trace_b, trace_a])
    return None


def discretize(
    sys: PhsSystem,
    qs: QSplit,
    bc: BoundaryCondition,
    N: int | None = None,
    family: NodeFamily = NodeFamily.LEGENDRE,
) -> DiscreteOperator:
    N = config.grid if N is None else N
    minimum = 2 * sys.n + 2
    if N < minimum:
        raise GridTooCoarseError(N, minimum)
    if qs.nd != sys.nd:
        raise DimensionMismatchError("boundary form", sys.nd, qs.nd)
    check_dimensions(qs, bc)

    grid = CollocationGrid.create(N, sys.interval, family)
    n, d = sys.n, sys.d

    ham = sys.ham.evaluate(grid.nodes)
    hblk = scipy.linalg.block_diag(*ham)
    powers = [np.linalg.matrix_power(grid.D, k) for k in range(n + 1)]

    a_h = sum(np.kron(powers[k], sys.P[k]) for k in range(n + 1)) @ hblk
    match family:
        case NodeFamily.LEGENDRE:
            weighted = grid.weights[:, np.newaxis, np.newaxis] * ham
            gram = scipy.linalg.block_diag(*weighted)
        case NodeFamily.CHEBYSHEV:
            if not sys.ham.is_constant:
                raise UnsupportedHamiltonianError(
                    "Chebyshev nodes need a constant density, use Legendre nodes"
                )
            gram = np.kron(grid.mass, ham[0])

    eye = np.eye(d)
    trace_a = np.vstack([np.kron(powers[k][:1, :], eye) for k in range(n)]) @ hblk
    trace_b = np.vstack([np.kron(powers[k][-1:, :], eye) for k in range(n)]) @ hblk
    f1 = qs.q_plus @ trace_b + qs.q_minus @ trace_a
    f2 = qs.q_minus @ trace_b + qs.q_plus @ trace_a

    constraint = _constraint(bc, f1, f2, trace_b, trace_a)
    kernel = matnum.null_space(constraint) if constraint is not None else None
    penalty = scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), f2.T)

    logger.debug(
        "Discretized %sx%s system on %s %s nodes",
        n,
        d,
        N,
        family.value,
    )

    return DiscreteOperator(
        grid=grid,
        sys=sys,
        qs=qs,
        bc=bc,
        A_h=a_h,
        G=gram,
        H=hblk,
        trace_a=trace_a,
        trace_b=trace_b,
        F1=f1,
        F2=f2,
        C=constraint,
        kernel=kernel,
        penalty=penalty,
    )


def accretive_tolerance(N: int) -> float:
    return ACCRETIVE_TOL_FACTOR / N**2


def _factorize_system(lhs: Matrix) -> tuple[Matrix, Any]:
    try:
        return matnum.factorize(lhs)
    except SingularMatrixError as ex:
        raise SingularSystemError(ex.pivot, ex.tolerance) from ex


def resolvent_matrix(op: DiscreteOperator, mu: float) -> Matrix:
    """Matrix of ``(mu + B_h)^-1`` for a linear boundary condition."""
    if op.kernel is None:
        raise ValueError("Resolvent matrix requires a linear boundary condition")

    key = ("linear", mu)
    if key not in op._cache:
        z = op.kernel
        shifted = mu * np.eye(op.size) + op.A_h
        factors = _factorize_system(z.T @ op.G @ shifted @ z)
        op._cache[key] = z @ matnum.solve_factored(factors, z.T @ op.G)
    return op._cache[key]


def resolvent_norm(op: DiscreteOperator, mu: float) -> float:
    """Operator norm of the discrete resolvent in the G inner product."""
    resolvent = resolvent_matrix(op, mu)
    chol = scipy.linalg.cholesky(op.G, lower=True)
    similar = scipy.linalg.solve_triangular(chol, resolvent.T @ chol, lower=True).T
    return float(scipy.linalg.svdvals(similar)[0])


def _penalty_system(op: DiscreteOperator, mu: float) -> tuple[Any, Matrix]:
    key = ("penalty", mu)
    if key not in op._cache:
        lhs = mu * np.eye(op.size) + op.A_h + op.penalty @ op.F2
        factors = _factorize_system(lhs)
        coupling = op.F1 @ matnum.solve_factored(factors, op.penalty)
        op._cache[key] = (factors, coupling)
    return op._cache[key]


def _nonlinear_resolvent(op: DiscreteOperator, mu: float, f: Vector) -> Vector:
    factors, coupling = _penalty_system(op, mu)
    g = op.boundary_map()

    # Fixed point on z = F1 u; u is recovered from the boundary data g(z).
    base = op.F1 @ matnum.solve_factored(factors, f)
    z = base.copy()
    damping = 1.0
    previous = np.inf
    step = np.inf
    for iteration in range(FIXED_POINT_MAX_ITER):
        update = base + coupling @ np.asarray(g(z)) - z
        step = float(np.linalg.norm(update))
        if not np.isfinite(step):
            raise NotConvergedError("Resolvent fixed point", iteration, step)
        if step <= FIXED_POINT_TOL * (1.0 + float(np.linalg.norm(z))):
            logger.debug("Fixed point converged after %s iterations", iteration)
            break
        if step > previous and damping == 1.0:
            logger.debug("Switching to damped iteration at step %s", iteration)
            damping = 0.5
        z = z + damping * update
        previous = step
    else:
        raise NotConvergedError("Resolvent fixed point", FIXED_POINT_MAX_ITER, step)

    return matnum.solve_factored(factors, f + op.penalty @ np.asarray(g(z)))


def resolvent_solve(op: DiscreteOperator, mu: float, f: Vector) -> Vector:
    """Solve ``mu u + B_h(u) = f``."""
    if mu <= 0.0:
        raise ValueError(f"Resolvent parameter must be positive, got {mu}")
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (op.size,):
        raise DimensionMismatchError("right-hand side", (op.size,), f.shape)

    if op.is_linear:
        return resolvent_matrix(op, mu) @ f
    return _nonlinear_resolvent(op, mu, f)


def random_smooth(
    grid: CollocationGrid,
    d: int,
    rng: np.random.Generator,
    degree: int = SMOOTH_DEGREE,
) -> Vector:
    """Grid samples of a random Chebyshev series with decaying coefficients."""
    coeffs = rng.normal(size=(d, degree + 1)) / (1.0 + np.arange(degree + 1)) ** 2
    values = np.array([Chebyshev(c, domain=grid.interval)(grid.nodes) for c in coeffs])
    return values.T.ravel()


def _resolve_mode(op: DiscreteOperator, mode: AccretivityMode) -> AccretivityMode:
    if mode == AccretivityMode.AUTO:
        return AccretivityMode.LINEAR if op.is_linear else AccretivityMode.NONLINEAR
    if mode == AccretivityMode.LINEAR and not op.is_linear:
        raise ValueError("Linear certification requires a linear boundary condition")
    return mode


def _certify_linear(op: DiscreteOperator) -> VerificationReport:
    z = op.kernel
    assert z is not None

    gram = z.T @ op.G @ z
    form = z.T @ op.G @ op.A_h @ z
    eigenvalues, eigenvectors = scipy.linalg.eigh(0.5 * (form + form.T), gram)
    min_eig = float(eigenvalues[0])
    tol = accretive_tolerance(op.grid.N)
    ok = min_eig >= -tol

    witnesses = []
    if not ok:
        witnesses.append({"u": z @ eigenvectors[:, 0], "value": min_eig})

    return VerificationReport(
        verdict=Verdict.of(ok),
        criterion="accretive",
        residuals={"min_eigenvalue": min_eig, "tolerance": tol},
        witnesses=witnesses,
        info={"mode": AccretivityMode.LINEAR.value, "N": op.grid.N},
    )


def _certify_nonlinear(
    op: DiscreteOperator, pairs: int, seed: int
) -> VerificationReport:
    tol = accretive_tolerance(op.grid.N)
    min_ratio = np.inf
    witnesses: list[dict[str, Any]] = []

    for rng in spawn_rngs(seed, pairs):
        f1 = random_smooth(op.grid, op.sys.d, rng)
        f2 = random_smooth(op.grid, op.sys.d, rng)
        try:
            u1 = resolvent_solve(op, 1.0, f1)
            u2 = resolvent_solve(op, 1.0, f2)
        except (NotConvergedError, SingularSystemError) as ex:
            return VerificationReport(
                verdict=Verdict.FAIL,
                criterion="accretive",
                residuals={"tolerance": tol},
                witnesses=[{"f1": f1, "f2": f2, "error": str(ex)}],
                info={"mode": AccretivityMode.NONLINEAR.value, "N": op.grid.N},
            )

        delta = u1 - u2
        dist = op.inner(delta, delta)
        if dist == 0.0:
            continue
        ratio = op.inner(op.apply_b(u1) - op.apply_b(u2), delta) / dist
        if ratio < min_ratio:
            min_ratio = ratio
            if ratio < -tol:
                witnesses = [{"u": u1, "v": u2, "value": ratio}]

    ok = min_ratio >= -tol
    if not np.isfinite(min_ratio):
        min_ratio = 0.0
    return VerificationReport(
        verdict=Verdict.of(ok),
        criterion="accretive",
        residuals={"min_ratio": float(min_ratio), "tolerance": tol},
        witnesses=witnesses if not ok else [],
        info={"mode": AccretivityMode.NONLINEAR.value, "N": op.grid.N, "pairs": pairs},
    )


def certify_accretive(
    op: DiscreteOperator,
    mode: AccretivityMode = AccretivityMode.AUTO,
    pairs: int = DEFAULT_PAIRS,
    seed: int | None = None,
) -> VerificationReport:
    """Check ``<B_h u - B_h v, u - v>_G >= -tol(N)`` on the discrete domain.

    Linear conditions give an exact generalized eigenvalue problem on the
    constraint null space; nonlinear ones are sampled through the resolvent.
    """
    mode = _resolve_mode(op, mode)
    seed = config.seed if seed is None else seed

    report = (
        _certify_linear(op)
        if mode == AccretivityMode.LINEAR
        else _certify_nonlinear(op, pairs, seed)
    )
    logger.info("Accretivity (%s mode): %s", mode.value, report.verdict.value)
    return report


def certify_m_accretive(
    op: DiscreteOperator,
    mu_list: Sequence[float] = DEFAULT_MUS,
    pairs: int = DEFAULT_PAIRS,
    seed: int | None = None,
) -> VerificationReport:
    """Check solvability and ``|(mu + B_h)^-1|_Lip <= 1/mu`` for each mu."""
    seed = config.seed if seed is None else seed
    residuals: dict[str, float] = {}
    witnesses: list[dict[str, Any]] = []
    bound = 1.0 + RESOLVENT_MARGIN

    for mu in mu_list:
        label = f"mu={mu:g}"
        try:
            if op.is_linear:
                exact = mu * resolvent_norm(op, mu)
                residuals[f"resolvent_norm[{label}]"] = exact
                if exact > bound:
                    witnesses.append({"mu": mu, "scaled_norm": exact})

            worst, worst_pair = 0.0, None
            for rng in spawn_rngs(seed, pairs):
                f1 = random_smooth(op.grid, op.sys.d, rng)
                f2 = random_smooth(op.grid, op.sys.d, rng)
                du = resolvent_solve(op, mu, f1) - resolvent_solve(op, mu, f2)
                ratio = mu * op.norm(du) / op.norm(f1 - f2)
                if ratio > worst:
                    worst, worst_pair = ratio, (f1, f2)
            residuals[f"max_ratio[{label}]"] = worst
            if worst > bound and worst_pair is not None:
                f1, f2 = worst_pair
                witnesses.append({"mu": mu, "f1": f1, "f2": f2, "ratio": worst})
        except (NotConvergedError, SingularSystemError) as ex:
            logger.debug("Resolvent failed for %s: %s", label, ex)
            witnesses.append({"mu": mu, "error": str(ex)})

    ok = not witnesses
    logger.info("Resolvent bound over mu=%s: %s", list(mu_list), Verdict.of(ok).value)
    return VerificationReport(
        verdict=Verdict.of(ok),
        criterion="m_accretive",
        residuals=residuals,
        witnesses=witnesses,
        info={"mu": list(mu_list), "pairs": pairs, "N": op.grid.N},
    )


class StdDecomposition(NamedTuple):
    pi1_coeff: float
    pim1_coeff: float
    residual_traces: tuple[float, float]


def _check_oracle_interval(interval: Interval) -> None:
    a, b = interval
    if not 0.0 < b - a <= MAX_ORACLE_LENGTH:
        raise ValueError(
            f"Oracle interval [{a}, {b}] must have length in (0, {MAX_ORACLE_LENGTH}]"
        )


def _exp_taylor(interval: Interval, sign: float) -> Polynomial:
    """``exp(sign * t)`` as a Taylor polynomial about the midpoint."""
    a, b = interval
    mid = 0.5 * (a + b)
    k = np.arange(TAYLOR_DEGREE + 1)
    coeffs = sign**k / scipy.special.factorial(k) * math.exp(sign * mid)
    return Polynomial(coeffs, domain=[a, b], window=[a - mid, b - mid])


def _graph_inner(interval: Interval, p: Polynomial, q: Polynomial) -> float:
    rule = matnum.QuadRule.for_degree(p.degree() + q.degree(), interval)
    dp, dq = p.deriv(), q.deriv()
    return matnum.quad_integrate(lambda x: p(x) * q(x) + dp(x) * dq(x), rule)


class _StdSystem:
    def __init__(self, interval: Interval) -> None:
        _check_oracle_interval(interval)
        self.interval = interval
        self.e_plus = _exp_taylor(interval, 1.0)
        self.e_minus = _exp_taylor(interval, -1.0)
        self.norm2_plus = _graph_inner(interval, self.e_plus, self.e_plus)
        self.norm2_minus = _graph_inner(interval, self.e_minus, self.e_minus)

    def coefficients(self, p: Polynomial) -> tuple[float, float]:
        return (
            _graph_inner(self.interval, p, self.e_plus) / self.norm2_plus,
            _graph_inner(self.interval, p, self.e_minus) / self.norm2_minus,
        )


def _scalar_poly(u: PolyFunction) -> Polynomial:
    if u.d != 1:
        raise DimensionMismatchError("scalar function", 1, u.d)
    return u.components[0]


def std_system_oracle_d1(interval: Interval, u: PolyFunction) -> StdDecomposition:
    """Decompose ``u`` along ``ker(1 - d/dt)`` and ``ker(1 + d/dt)``.

    The remainder must vanish at both endpoints.
    """
    std = _StdSystem(interval)
    p = _scalar_poly(u)
    c_plus, c_minus = std.coefficients(p)

    def remainder(t: float) -> float:
        return float(p(t) - c_plus * std.e_plus(t) - c_minus * std.e_minus(t))

    a, b = interval
    return StdDecomposition(c_plus, c_minus, (remainder(a), remainder(b)))


def std_system_green_residual(
    interval: Interval, u: PolyFunction, v: PolyFunction
) -> float:
    std = _StdSystem(interval)
    p, q = _scalar_poly(u), _scalar_poly(v)

    rule = matnum.QuadRule.for_degree(p.degree() + q.degree(), interval)
    dp, dq = p.deriv(), q.deriv()
    volume = matnum.quad_integrate(lambda x: dp(x) * q(x) + p(x) * dq(x), rule)

    pu, mu_ = std.coefficients(p)
    pv, mv = std.coefficients(q)
    boundary = pu * pv * std.norm2_plus - mu_ * mv * std.norm2_minus
    return abs(volume - boundary)


@dataclass(frozen=True, eq=False)
class DerivedH:
    """Sampled map ``h`` on ``ker(1 - d/dt)`` coefficients."""

    probes: Vector
    values: Vector
    spreads: Vector
    report: VerificationReport


def _shapes(
    rng: np.random.Generator, interval: Interval, count: int
) -> list[Polynomial]:
    a, b = interval
    bubble = -Polynomial.fromroots([a, b])
    shapes = [Polynomial([0.0])]
    while len(shapes) < count:
        ya, yb = rng.uniform(-1.0, 1.0, 2)
        slope = (yb - ya) / (b - a)
        linear = Polynomial([ya - slope * a, slope])
        shapes.append(linear + bubble * Polynomial(rng.uniform(-1.0, 1.0, 3)))
    return shapes


def _scalar_map(g: BoundaryMap) -> Callable[[float], float]:
    def _g(x: float) -> float:
        return float(np.asarray(g(np.array([x])), dtype=np.float64).ravel()[0])

    return _g


def _solve_monotone(
    residual: Callable[[float], float], width: float, probe: float
) -> float:
    lo, hi = -width, width
    for _ in range(60):
        if residual(lo) >= 0.0 >= residual(hi):
            return float(scipy.optimize.brentq(residual, lo, hi, xtol=1e-15))
        lo, hi = 2.0 * lo, 2.0 * hi
    raise ConstructionFailedError(probe, "no sign change of the boundary residual")


def derive_h_from_g(
    interval: Interval,
    g: BoundaryMap,
    probes: Sequence[float],
    shapes: int = 3,
    seed: int | None = None,
) -> DerivedH:
    """Sample the map h with ``h(pi1 u) = pi-1 u`` induced by ``g(u(b)) = u(a)``.

    Each probe is realized by several elements ``s + x1 e^t + x2 e^-t`` of the
    domain with different shapes ``s``; the spread of ``pi-1 u`` across them
    measures how well h is defined.
    """
    std = _StdSystem(interval)
    a, b = interval
    gs = _scalar_map(g)
    constructions = _shapes(make_rng(seed), interval, max(shapes, 1))
    ep_a, ep_b = float(std.e_plus(a)), float(std.e_plus(b))
    em_a, em_b = float(std.e_minus(a)), float(std.e_minus(b))

    values, spreads = [], []
    for c in probes:
        betas = []
        for s in constructions:
            c_plus, c_minus = std.coefficients(s)
            x1 = c - c_plus
            ub = float(s(b)) + x1 * ep_b
            ua = float(s(a)) + x1 * ep_a

            def residual(x2: float, ub: float = ub, ua: float = ua) -> float:
                return gs(ub + x2 * em_b) - (ua + x2 * em_a)

            width = 1.0 + (abs(ub) + abs(ua)) * math.exp(abs(a) + abs(b))
            betas.append(c_minus + _solve_monotone(residual, width, c))

        values.append(betas[0])
        spreads.append(max(betas) - min(betas))

    probes_arr = np.asarray(probes, dtype=np.float64)
    values_arr = np.asarray(values)
    spreads_arr = np.asarray(spreads)

    norm_plus, norm_minus = math.sqrt(std.norm2_plus), math.sqrt(std.norm2_minus)
    max_ratio = 0.0
    for i in range(len(probes_arr)):
        for j in range(i + 1, len(probes_arr)):
            dc = abs(probes_arr[i] - probes_arr[j])
            if dc == 0.0:
                continue
            ratio = abs(values_arr[i] - values_arr[j]) * norm_minus / (dc * norm_plus)
            max_ratio = max(max_ratio, ratio)

    max_spread = float(np.max(spreads_arr)) if len(spreads_arr) else 0.0
    ok = max_spread <= SPREAD_TOL and max_ratio <= 1.0 + LIPSCHITZ_MARGIN
    report = VerificationReport(
        verdict=Verdict.of(ok),
        criterion="derived_h",
        residuals={"max_spread": max_spread, "max_ratio": max_ratio},
        info={"probes": len(probes_arr), "constructions": len(constructions)},
    )
    logger.info("Derived h on %s probes: %s", len(probes_arr), report.verdict.value)

    return DerivedH(probes_arr, values_arr, spreads_arr, report)
