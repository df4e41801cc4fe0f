"""Lipschitz extension of finitely many sampled boundary pairs.

A valid sample set ``{(x_i, y_i)}`` with Lipschitz constant ``L`` extends to
any query point ``x``: the balls ``B(y_i, L |x - x_i|)`` have a common point.
That point is found by minimizing the convex function

    phi(y) = max_i (|y - y_i| - L |x - x_i|)

whose minimum is not positive.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.optimize
from scipy.spatial.distance import cdist

from phbound.const import (
    KIRSZBRAUN_EPS,
    KIRSZBRAUN_GAP_TOL,
    KIRSZBRAUN_MAX_CUTS,
    KIRSZBRAUN_MAX_ITER,
    KIRSZBRAUN_TOL,
)
from phbound.exceptions import (
    DimensionMismatchError,
    InvalidSamplesError,
    NotConvergedError,
)
from phbound.report import Verdict, VerificationReport
from phbound.typing import Matrix, Vector

logger = logging.getLogger(__name__)

SAMPLE_TOL = 1e-9

# Internal target for phi; anything up to KIRSZBRAUN_TOL is accepted at the cap.
_STOP_TARGET = 1e-10


def _as_rows(points: Any, what: str) -> Matrix:
    rows = np.asarray(points, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[:, np.newaxis]
    if rows.ndim != 2:
        raise DimensionMismatchError(what, "list of vectors", rows.shape)
    return rows


def _worst_pair(
    xs: Matrix, ys: Matrix, lip: float
) -> tuple[float, tuple[int, int] | None]:
    if len(xs) < 2:
        return -np.inf, None
    excess = cdist(ys, ys) - lip * cdist(xs, xs)
    np.fill_diagonal(excess, -np.inf)
    i, j = np.unravel_index(np.argmax(excess), excess.shape)
    return float(excess[i, j]), (int(min(i, j)), int(max(i, j)))


def validate_samples(
    xs: Any, ys: Any, lip: float, tol: float = SAMPLE_TOL
) -> VerificationReport:
    xs, ys = _as_rows(xs, "sample inputs"), _as_rows(ys, "sample outputs")
    if len(xs) != len(ys):
        raise DimensionMismatchError("sample outputs", len(xs), len(ys))

    excess, pair = _worst_pair(xs, ys, lip)
    ok = pair is None or excess <= tol

    witnesses = []
    if not ok and pair is not None:
        i, j = pair
        dist = float(np.linalg.norm(xs[i] - xs[j]))
        witnesses.append(
            {
                "i": i,
                "j": j,
                "x_i": xs[i],
                "x_j": xs[j],
                "y_i": ys[i],
                "y_j": ys[j],
                "ratio": float(np.linalg.norm(ys[i] - ys[j]) / dist)
                if dist > 0.0
                else float("inf"),
            }
        )

    return VerificationReport(
        verdict=Verdict.of(ok),
        criterion="lipschitz_samples",
        residuals={"max_excess": max(excess, 0.0) if pair else 0.0},
        witnesses=witnesses,
        info={"samples": len(xs), "lip": lip, "tolerance": tol},
    )


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Validated pairs ``(x_i, y_i)`` of an ``L``-Lipschitz map."""

    xs: Matrix
    ys: Matrix
    lip: float

    def __post_init__(self) -> None:
        if self.lip <= 0.0:
            raise ValueError(f"Lipschitz constant must be positive, got {self.lip}")
        if len(self.xs) == 0:
            raise ValueError("Sample set is empty")
        if len(self.xs) != len(self.ys):
            raise DimensionMismatchError("sample outputs", len(self.xs), len(self.ys))

        excess, pair = _worst_pair(self.xs, self.ys, self.lip)
        if pair is not None and excess > SAMPLE_TOL:
            i, j = pair
            dist = float(np.linalg.norm(self.xs[i] - self.xs[j]))
            gap = float(np.linalg.norm(self.ys[i] - self.ys[j]))
            ratio = np.inf if dist == 0.0 else gap / dist
            raise InvalidSamplesError(i, j, float(ratio), self.lip)

    @classmethod
    def create(cls, xs: Any, ys: Any, lip: float = 1.0) -> "SampleSet":
        return cls(_as_rows(xs, "sample inputs"), _as_rows(ys, "sample outputs"), lip)

    @property
    def input_dim(self) -> int:
        return int(self.xs.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.ys.shape[1])

    def __len__(self) -> int:
        return len(self.xs)


def _phi(y: Vector, ys: Matrix, radii: Vector) -> tuple[float, int]:
    gaps = np.linalg.norm(ys - y, axis=1) - radii
    idx = int(np.argmax(gaps))
    return float(gaps[idx]), idx


def _extend(xs: Matrix, ys: Matrix, lip: float, x: Vector) -> Vector:
    radii = lip * np.linalg.norm(xs - x, axis=1)

    weights = 1.0 / (radii + KIRSZBRAUN_EPS)
    y = weights @ ys / np.sum(weights)

    best_y, (best_phi, _) = y, _phi(y, ys, radii)
    for iteration in range(KIRSZBRAUN_MAX_ITER):
        phi, idx = _phi(y, ys, radii)
        if phi < best_phi:
            best_y, best_phi = y, phi
        if best_phi <= _STOP_TARGET:
            break

        # Subgradient step with Polyak's step length phi(y), i.e. the
        # projection onto the most violated ball.
        offset = y - ys[idx]
        dist = float(np.linalg.norm(offset))
        if dist == 0.0:
            break
        y = y - phi * offset / dist
    else:
        logger.debug("Extension reached the iteration cap with phi=%.3e", best_phi)
        iteration = KIRSZBRAUN_MAX_ITER

    if best_phi > KIRSZBRAUN_TOL:
        raise NotConvergedError("Lipschitz extension", iteration, best_phi)

    logger.debug("Feasible after %s iterations (phi=%.3e)", iteration, best_phi)
    return _minimize(ys, radii, best_y, best_phi)


def _minimize(ys: Matrix, radii: Vector, y: Vector, phi: float) -> Vector:
    """Cutting planes on the epigraph of phi, started from a feasible point.

    Every minimizer lies in the ball ``B(y_i, r_i + phi)`` of each sample, so
    the linear programs stay bounded. The optimal value of the cut model is a
    lower bound of min phi and the loop stops once the gap closes.
    """
    q = ys.shape[1]
    reach = radii + phi
    lower = np.max(ys - reach[:, np.newaxis], axis=0)
    upper = np.maximum(np.min(ys + reach[:, np.newaxis], axis=0), lower)
    bounds = [*zip(lower, upper, strict=True), (None, None)]
    cost = np.zeros(q + 1)
    cost[-1] = 1.0

    rows: list[Matrix] = []
    rhs: list[Vector] = []
    best_y, best_phi = y, phi
    gap = np.inf
    for iteration in range(KIRSZBRAUN_MAX_CUTS):
        offsets = y - ys
        dists = np.linalg.norm(offsets, axis=1)
        grads = offsets / np.maximum(dists, KIRSZBRAUN_EPS)[:, np.newaxis]
        grads[dists == 0.0] = 0.0

        # |z - y_i| - r_i >= dist_i - r_i + grad_i (z - y), so each cut reads
        # grad_i z - t <= grad_i y - dist_i + r_i.
        rows.append(np.hstack([grads, -np.ones((len(ys), 1))]))
        rhs.append(grads @ y - dists + radii)
        result = scipy.optimize.linprog(
            cost,
            A_ub=np.vstack(rows),
            b_ub=np.concatenate(rhs),
            bounds=bounds,
            method="highs",
        )
        if result.status != 0:
            logger.debug("Cut model stopped: %s", result.message)
            break

        y = result.x[:q]
        value, _ = _phi(y, ys, radii)
        if value < best_phi:
            best_y, best_phi = y, value
        gap = best_phi - float(result.fun)
        if gap <= KIRSZBRAUN_GAP_TOL:
            break
    else:
        iteration = KIRSZBRAUN_MAX_CUTS

    logger.debug(
        "Minimized after %s cuts (phi=%.3e, gap=%.1e)", iteration, best_phi, gap
    )
    return best_y


def _query(s: SampleSet, x: Any) -> Vector:
    query = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if query.shape != (s.input_dim,):
        raise DimensionMismatchError("query point", (s.input_dim,), query.shape)
    return query


def extend(s: SampleSet, x: Any) -> Vector:
    return _extend(s.xs, s.ys, s.lip, _query(s, x))


def extend_sequential(s: SampleSet, queries: Sequence[Any]) -> list[Vector]:
    """Extend at each query in turn, adding every result to the working set.

    The returned values are therefore consistent with each other as well as
    with the original samples.
    """
    xs, ys = s.xs.copy(), s.ys.copy()
    results = []
    for q in queries:
        x = _query(s, q)
        y = _extend(xs, ys, s.lip, x)
        xs = np.vstack([xs, x])
        ys = np.vstack([ys, y])
        results.append(y)

    logger.info("Extended %s samples to %s query points", len(s), len(results))
    return results
