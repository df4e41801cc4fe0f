import csv
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from phbound.bcspec import BoundaryCondition
from phbound.const import BALANCE_TOL_FACTOR, CONTRACTION_RTOL, PROJECTION_MU
from phbound.discrete import CollocationGrid, DiscreteOperator, resolvent_solve
from phbound.exceptions import (
    DimensionMismatchError,
    MismatchedTrajectoriesError,
    NotConvergedError,
)
from phbound.phs import HamiltonianDensity, PhsSystem
from phbound.report import Verdict, VerificationReport
from phbound.typing import Matrix, Vector
from phbound.utils import scaled_tol

logger = logging.getLogger(__name__)

CSV_FIXED_COLUMNS = ("time", "energy", "flux")


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: Vector
    states: Matrix
    energies: Vector
    fluxes: Vector

    def __post_init__(self) -> None:
        count = len(self.times)
        if self.states.ndim != 2 or not (
            len(self.states) == len(self.energies) == len(self.fluxes) == count
        ):
            raise ValueError("Trajectory columns have inconsistent lengths")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("Trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> Vector:
        return self.states[-1]

    def to_csv(self, path: Path) -> None:
        width = self.states.shape[1]
        with path.open("w", encoding="utf-8", newline="") as file:
            writer = csv.writer(file)
            writer.writerow([*CSV_FIXED_COLUMNS, *(f"u{j}" for j in range(width))])
            for row in zip(
                self.times, self.energies, self.fluxes, self.states, strict=True
            ):
                t, energy, flux, state = row
                values = [t, energy, flux, *state]
                writer.writerow([f"{float(v):.17g}" for v in values])

        logger.info("Wrote %s trajectory rows to %s", len(self), path)

    @classmethod
    def read_csv(cls, path: Path) -> "Trajectory":
        with path.open(encoding="utf-8", newline="") as file:
            reader = csv.reader(file)
            header = next(reader)
            if tuple(header[:3]) != CSV_FIXED_COLUMNS:
                raise ValueError(f"{path}: unexpected header {header[:3]}")
            rows = np.array([[float(v) for v in row] for row in reader])

        if rows.size == 0:
            raise ValueError(f"{path}: no trajectory rows")

        return cls(
            times=rows[:, 0],
            energies=rows[:, 1],
            fluxes=rows[:, 2],
            states=rows[:, 3:],
        )


def step_implicit(op: DiscreteOperator, u: Vector, dt: float) -> Vector:
    if dt <= 0.0:
        raise ValueError(f"Time step must be positive, got {dt}")
    return resolvent_solve(op, 1.0 / dt, np.asarray(u) / dt)


def project_initial(op: DiscreteOperator, u0: Vector) -> Vector:
    """Pull ``u0`` onto the constraint set with one large-mu resolvent solve."""
    return resolvent_solve(op, PROJECTION_MU, PROJECTION_MU * np.asarray(u0))


def simulate(
    op: DiscreteOperator,
    u0: Vector,
    T: float,
    dt: float,
    project: bool = True,
) -> Trajectory:
    if T <= 0.0 or dt <= 0.0:
        raise ValueError(f"Final time and step must be positive (T={T}, dt={dt})")
    u0 = np.asarray(u0, dtype=np.float64)
    if u0.shape != (op.size,):
        raise DimensionMismatchError("initial state", (op.size,), u0.shape)

    steps = max(1, math.ceil(T / dt - 1e-9))
    u = project_initial(op, u0) if project else u0

    states = [u]
    for k in range(1, steps + 1):
        try:
            u = step_implicit(op, u, dt)
        except NotConvergedError as ex:
            raise NotConvergedError(
                f"Implicit step {k}", ex.iterations, ex.residual
            ) from ex
        states.append(u)
        logger.debug("Step %s/%s: energy %.6e", k, steps, op.inner(u, u))

    logger.info("Simulated %s steps of size %s", steps, dt)

    return Trajectory(
        times=dt * np.arange(steps + 1),
        states=np.array(states),
        energies=np.array([op.inner(s, s) for s in states]),
        fluxes=np.array([op.flux(s) for s in states]),
    )


def contraction_check(
    traj_u: Trajectory, traj_v: Trajectory, gram: Matrix
) -> VerificationReport:
    """Distances ``|u_k - v_k|_G`` must not increase from one step to the next."""
    if len(traj_u) != len(traj_v) or not np.array_equal(traj_u.times, traj_v.times):
        raise MismatchedTrajectoriesError("time grids differ")
    if traj_u.states.shape != traj_v.states.shape:
        raise MismatchedTrajectoriesError("state dimensions differ")
    if gram.shape != (traj_u.states.shape[1],) * 2:
        raise MismatchedTrajectoriesError("Gram matrix does not match the states")

    delta = traj_u.states - traj_v.states
    distances = np.sqrt(np.maximum(np.einsum("ki,ij,kj->k", delta, gram, delta), 0.0))
    tol = scaled_tol(CONTRACTION_RTOL, float(distances[0]))
    growth = np.diff(distances)

    worst = int(np.argmax(growth)) if len(growth) else 0
    max_growth = float(growth[worst]) if len(growth) else 0.0
    ok = max_growth <= tol

    witnesses = []
    if not ok:
        witnesses.append(
            {
                "step": worst + 1,
                "before": float(distances[worst]),
                "after": float(distances[worst + 1]),
            }
        )

    return VerificationReport(
        verdict=Verdict.of(ok),
        criterion="contraction_semigroup",
        residuals={
            "max_growth": max_growth,
            "initial_distance": float(distances[0]),
            "final_distance": float(distances[-1]),
        },
        witnesses=witnesses,
        info={"steps": len(traj_u) - 1},
    )


def energy_monotonicity_check(traj: Trajectory) -> VerificationReport:
    tol = scaled_tol(CONTRACTION_RTOL, float(traj.energies[0]))
    increase = np.diff(traj.energies)

    worst = int(np.argmax(increase)) if len(increase) else 0
    max_increase = float(increase[worst]) if len(increase) else 0.0
    ok = max_increase <= tol

    witnesses = []
    if not ok:
        witnesses.append({"step": worst + 1, "increase": max_increase})

    return VerificationReport(
        verdict=Verdict.of(ok),
        criterion="energy_monotone",
        residuals={
            "max_increase": max_increase,
            "initial_energy": float(traj.energies[0]),
            "final_energy": float(traj.energies[-1]),
        },
        witnesses=witnesses,
    )


def balance_tolerance(op: DiscreteOperator, u0: Vector, dt: float) -> float:
    """``C ((dt + N^-2) |u0|^2 + dt |B_h u0|^2)``.

    An implicit Euler step dissipates ``|u_k+1 - u_k|^2 / dt = dt |B_h u_k+1|^2``
    and ``|B_h u_k|`` does not grow along the trajectory, so the second term
    bounds the dissipation of every step.
    """
    bu = op.apply_b(u0)
    scale = (dt + op.grid.N**-2) * op.inner(u0, u0) + dt * op.inner(bu, bu)
    return scaled_tol(BALANCE_TOL_FACTOR, scale)


def energy_balance_check(
    traj: Trajectory, dt: float, op: DiscreteOperator
) -> VerificationReport:
    """Per step, ``d|u|^2/dt + |F1|^2 - |F2|^2`` must vanish up to tol(dt, N).

    Fluxes are taken at the end of each step.
    """
    tol = balance_tolerance(op, traj.states[0], dt)
    if len(traj) < 2:
        defects = np.zeros(0)
    else:
        defects = np.abs(np.diff(traj.energies) / dt + traj.fluxes[1:])

    worst = int(np.argmax(defects)) if len(defects) else 0
    max_defect = float(defects[worst]) if len(defects) else 0.0
    ok = max_defect <= tol

    witnesses = []
    if not ok:
        witnesses.append({"step": worst + 1, "defect": max_defect})

    return VerificationReport(
        verdict=Verdict.of(ok),
        criterion="energy_balance",
        residuals={"max_defect": max_defect, "tolerance": tol},
        witnesses=witnesses,
        info={"dt": dt, "N": op.grid.N},
    )


def _bump(s: Vector) -> Vector:
    return np.exp(-100.0 * (s - 0.5) ** 2)


def _wave(s: Vector) -> Vector:
    return 0.5 + 0.2 * np.sin(2.0 * np.pi * s)


PROFILES: dict[str, Callable[[Vector], Vector]] = {
    "zero": np.zeros_like,
    "bump": _bump,
    "wave": _wave,
    "constant": np.ones_like,
}


def initial_profile(name: str, grid: CollocationGrid, d: int) -> Vector:
    """Built-in initial data, the same profile in every component."""
    if name not in PROFILES:
        raise ValueError(
            f"Unknown initial profile '{name}' (known: {', '.join(PROFILES)})"
        )
    a, b = grid.interval
    values = PROFILES[name]((grid.nodes - a) / (b - a))
    return np.repeat(values, d)


@dataclass(frozen=True, eq=False)
class WeightedWrap:
    """The flat problem for ``v = H u`` on unweighted L2.

    Boundary conditions already act on traces of ``H u``, so the flat system
    keeps them unchanged.
    """

    weighted: PhsSystem
    flat: PhsSystem
    bc: BoundaryCondition

    def _blocks(self, grid: CollocationGrid) -> np.ndarray:
        return self.weighted.ham.evaluate(grid.nodes)

    def to_flat(self, grid: CollocationGrid, u: Vector) -> Vector:
        return scipy.linalg.block_diag(*self._blocks(grid)) @ u

    def from_flat(self, grid: CollocationGrid, v: Vector) -> Vector:
        d = self.weighted.d
        rhs = np.reshape(v, (grid.N, d, 1))
        return np.linalg.solve(self._blocks(grid), rhs).ravel()


def weighted_wrap(sys: PhsSystem, bc: BoundaryCondition) -> WeightedWrap:
    flat = sys.with_hamiltonian(HamiltonianDensity.identity(sys.d))
    return WeightedWrap(weighted=sys, flat=flat, bc=bc)
