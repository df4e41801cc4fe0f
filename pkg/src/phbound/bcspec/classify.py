import logging
from typing import NamedTuple

import numpy as np

from phbound import matnum
from phbound.bcspec.types import BoundaryCondition, KernelW, LinearM, NonlinearG
from phbound.config import config
from phbound.const import (
    LIPSCHITZ_MARGIN,
    MEMBERSHIP_RTOL,
    NORM_MARGIN,
    PSD_MARGIN,
)
from phbound.exceptions import (
    DimensionMismatchError,
    KSingularError,
    RankDeficientError,
    SingularMatrixError,
)
from phbound.funcspace import PolyFunction, apply_hamiltonian, boundary_map, trace
from phbound.phs import PhsSystem, QSplit, boundary_block
from phbound.report import Verdict, VerificationReport
from phbound.typing import Matrix, Vector
from phbound.utils import make_rng, scaled_tol

logger = logging.getLogger(__name__)

# Separations used for the pairs concentrated near each other.
SMALL_SEPARATIONS = (1e-2, 1e-4, 1e-6)


class Membership(NamedTuple):
    member: bool
    residual: float


def check_dimensions(qs: QSplit, bc: BoundaryCondition) -> None:
    nd = qs.nd
    match bc:
        case LinearM(M=m) if m.shape != (nd, nd):
            raise DimensionMismatchError("M", (nd, nd), m.shape)
        case KernelW(W=w) if w.shape != (nd, 2 * nd):
            raise DimensionMismatchError("W", (nd, 2 * nd), w.shape)
        case NonlinearG(g=g):
            out = np.asarray(g(np.zeros(nd)), dtype=np.float64)
            if out.shape != (nd,):
                raise DimensionMismatchError("g(x)", (nd,), out.shape)


def pos_def_w_matrix(qs: QSplit, w: Matrix) -> Matrix:
    """``W [[-Q, Q], [1, 1]]^-1 [[0, 1], [1, 0]] (W [[-Q, Q], [1, 1]]^-1)^T``."""
    nd = qs.nd
    eye = np.eye(nd)
    outer = np.block([[-qs.Q, qs.Q], [eye, eye]])
    swap = np.block([[np.zeros((nd, nd)), eye], [eye, np.zeros((nd, nd))]])
    left = matnum.solve(outer.T, w.T).T
    mat = left @ swap @ left.T
    return 0.5 * (mat + mat.T)


def _sample_pairs(
    nd: int, samples: int, seed: int, box: float
) -> tuple[np.ndarray, np.ndarray]:
    rng = make_rng(seed)
    wide = samples - samples // 2
    xs = rng.uniform(-box, box, size=(samples, nd))
    ys = np.empty_like(xs)
    ys[:wide] = rng.uniform(-box, box, size=(wide, nd))

    close = samples - wide
    directions = rng.normal(size=(close, nd))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    seps = np.resize(np.asarray(SMALL_SEPARATIONS), close)[:, np.newaxis]
    ys[wide:] = xs[wide:] + box * seps * directions
    return xs, ys


def _classify_nonlinear(
    qs: QSplit, bc: NonlinearG, samples: int, seed: int
) -> VerificationReport:
    xs, ys = _sample_pairs(qs.nd, samples, seed, config.sample_box)

    best_ratio, best_idx = 0.0, -1
    for idx, (x, y) in enumerate(zip(xs, ys, strict=True)):
        dist = np.linalg.norm(x - y)
        if dist == 0.0:
            continue
        ratio = float(np.linalg.norm(bc.g(x) - bc.g(y)) / dist)
        if ratio > best_ratio:
            best_ratio, best_idx = ratio, idx

    ok = best_ratio <= 1.0 + LIPSCHITZ_MARGIN and bc.claimed_lip <= 1.0
    logger.info(
        "Sampled Lipschitz ratio of %s over %s pairs: %.6g",
        bc.label,
        samples,
        best_ratio,
    )

    witnesses = []
    if not ok and best_idx >= 0:
        witnesses.append({"x": xs[best_idx], "y": ys[best_idx]})

    return VerificationReport(
        verdict=Verdict.of(ok),
        criterion="contraction",
        residuals={"max_ratio": best_ratio, "claimed_lip": bc.claimed_lip},
        witnesses=witnesses,
        info={
            "samples": samples,
            "seed": seed,
            "status": "not falsified" if ok else "falsified",
        },
    )


def _classify_kernel(qs: QSplit, w: Matrix) -> VerificationReport:
    nd = qs.nd
    w_rank = matnum.rank(w)
    residuals: dict[str, float] = {"rank": float(w_rank)}
    witnesses = []

    ok = w_rank == nd
    if ok:
        mat = pos_def_w_matrix(qs, w)
        eigenvalues, eigenvectors = matnum.sym_eig(mat)
        min_eig = float(eigenvalues[-1])
        residuals["min_eigenvalue"] = min_eig
        if nd == 1:
            residuals["pos_def_w"] = float(mat[0, 0])
        ok = min_eig >= -scaled_tol(PSD_MARGIN, matnum.norm(mat))
        if not ok:
            witnesses.append({"direction": eigenvectors[:, -1], "value": min_eig})

    return VerificationReport(
        verdict=Verdict.of(ok),
        criterion="kernel_psd",
        residuals=residuals,
        witnesses=witnesses,
        info={"expected_rank": nd},
    )


def classify(
    qs: QSplit,
    bc: BoundaryCondition,
    samples: int | None = None,
    seed: int | None = None,
) -> VerificationReport:
    """Decide whether ``bc`` yields an m-accretive restriction.

    The verdict only depends on the boundary form, not on the Hamiltonian.
    """
    check_dimensions(qs, bc)
    samples = config.samples if samples is None else samples
    seed = config.seed if seed is None else seed

    match bc:
        case NonlinearG():
            return _classify_nonlinear(qs, bc, samples, seed)
        case LinearM(M=m):
            m_norm = matnum.spectral_norm(m)
            ok = m_norm <= 1.0 + NORM_MARGIN
            witnesses = []
            if not ok:
                _, vecs = matnum.sym_eig(m.T @ m)
                witnesses.append({"x": vecs[:, 0], "gain": m_norm})
            return VerificationReport(
                verdict=Verdict.of(ok),
                criterion="spectral_norm",
                residuals={"spectral_norm": m_norm},
                witnesses=witnesses,
            )
        case KernelW(W=w):
            return _classify_kernel(qs, w)

    raise TypeError(f"Unknown boundary condition {bc!r}")


def w_to_m(qs: QSplit, w: Matrix) -> tuple[Matrix, Matrix]:
    nd = qs.nd
    if w.shape != (nd, 2 * nd):
        raise DimensionMismatchError("W", (nd, 2 * nd), w.shape)

    w_rank = matnum.rank(w)
    if w_rank < nd:
        raise RankDeficientError(w_rank, nd)

    w_prime = matnum.solve(boundary_block(qs).T, w.T).T
    k = w_prime[:, nd:]
    try:
        m = -matnum.solve(k, w_prime[:, :nd])
    except SingularMatrixError as ex:
        raise KSingularError() from ex

    return m, k


def m_to_w(qs: QSplit, m: Matrix, k: Matrix | None = None) -> Matrix:
    nd = qs.nd
    if m.shape != (nd, nd):
        raise DimensionMismatchError("M", (nd, nd), m.shape)

    if k is None:
        k = np.eye(nd)
    elif k.shape != (nd, nd) or not matnum.is_invertible(k):
        raise KSingularError()

    return k @ np.hstack([qs.q_minus - m @ qs.q_plus, qs.q_plus - m @ qs.q_minus])


def structural_checks(
    qs: QSplit,
    bc: BoundaryCondition,
    samples: int | None = None,
    seed: int | None = None,
) -> VerificationReport:
    """Whether g fixes the origin and whether it is linear.

    A linear representation (M or W) that does not pass both is inconsistent.
    """
    check_dimensions(qs, bc)
    samples = min(config.samples if samples is None else samples, 200)
    rng = make_rng(config.seed if seed is None else seed)
    g = bc.as_map(qs)
    nd = qs.nd

    g_zero = float(np.linalg.norm(g(np.zeros(nd))))
    zero_ok = g_zero <= scaled_tol(MEMBERSHIP_RTOL, 1.0)

    witnesses = []
    additivity = homogeneity = 0.0
    box = config.sample_box
    for _ in range(samples):
        x = rng.uniform(-box, box, nd)
        y = rng.uniform(-box, box, nd)
        s = rng.uniform(-2.0, 2.0)
        scale = 1.0 + np.linalg.norm(x) + np.linalg.norm(y)
        add = float(np.linalg.norm(g(x + y) - g(x) - g(y)) / scale)
        hom = float(np.linalg.norm(g(s * x) - s * g(x)) / scale)
        if max(add, hom) > max(additivity, homogeneity) and max(add, hom) > 1e-9:
            witnesses = [{"x": x, "y": y, "s": s}]
        additivity = max(additivity, add)
        homogeneity = max(homogeneity, hom)

    linear_ok = max(additivity, homogeneity) <= 1e-9
    checks = {"fixes_origin": zero_ok, "linear": linear_ok}

    representation_linear = isinstance(bc, LinearM | KernelW)
    consistent = not representation_linear or (zero_ok and linear_ok)

    info: dict = {"checks": checks, "samples": samples}
    if not representation_linear and linear_ok and zero_ok:
        info["note"] = "map appears linear: representable as LinearM"

    residuals = {
        "g_zero_norm": g_zero,
        "additivity": additivity,
        "homogeneity": homogeneity,
    }
    return VerificationReport(
        verdict=Verdict.of(consistent),
        criterion="structure",
        residuals=residuals,
        witnesses=witnesses if not linear_ok else [],
        info=info,
    )


def domain_membership(
    sys: PhsSystem, qs: QSplit, bc: BoundaryCondition, u: PolyFunction
) -> Membership:
    w = apply_hamiltonian(sys, u)
    f1, f2 = boundary_map(qs, w)

    if isinstance(bc, KernelW):
        try:
            m, _ = w_to_m(qs, bc.W)
            residual_vec = m @ f1 - f2
        except (KSingularError, RankDeficientError):
            a, b = sys.interval
            traces = np.concatenate(
                [trace(w, b, sys.n).values, trace(w, a, sys.n).values]
            )
            residual_vec = bc.W @ traces
    else:
        residual_vec = np.asarray(bc.as_map(qs)(f1)) - f2

    residual = float(np.linalg.norm(residual_vec))
    scale = 1.0 + float(np.linalg.norm(f1) + np.linalg.norm(f2))
    return Membership(residual <= MEMBERSHIP_RTOL * scale, residual)


def constraint_residual(
    qs: QSplit, bc: BoundaryCondition, f1: Vector, f2: Vector
) -> Vector:
    return np.asarray(bc.as_map(qs)(f1)) - f2
