import numpy as np
import pandas as pd
import pytest

from phbound.bcspec import ContractionFactory, LinearM, NonlinearG
from phbound.discrete import (
    CollocationGrid,
    certify_accretive,
    certify_m_accretive,
    discretize,
)
from phbound.exceptions import DimensionMismatchError, MismatchedTrajectoriesError
from phbound.funcspace import PolyFunction
from phbound.phs import HamiltonianDensity, PhsSystem, split_system
from phbound.report import Verdict
from phbound.semigroup import (
    Trajectory,
    balance_tolerance,
    contraction_check,
    energy_balance_check,
    energy_monotonicity_check,
    initial_profile,
    simulate,
    step_implicit,
    weighted_wrap,
)

UNIT = (0.0, 1.0)


@pytest.fixture(name="make_op")
def fixture_make_op(transport, transport_qs, inflow):
    def _make_op(alpha: float, N: int = 16):
        return discretize(transport, transport_qs, inflow(alpha), N=N)

    return _make_op


def trajectory(energies: list[float]) -> Trajectory:
    count = len(energies)
    return Trajectory(
        times=np.arange(count, dtype=float),
        states=np.zeros((count, 2)),
        energies=np.array(energies),
        fluxes=np.zeros(count),
    )


def test_simulate_zero(make_op):
    op = make_op(0.5)
    traj = simulate(op, np.zeros(op.size), 0.1, 0.01)
    assert len(traj) == 11
    assert traj.times[-1] == pytest.approx(0.1)
    assert np.array_equal(traj.energies, np.zeros(11))
    assert np.array_equal(traj.fluxes, np.zeros(11))


def test_simulate_rounds_up_step_count(make_op):
    op = make_op(0.5, N=8)
    traj = simulate(op, initial_profile("wave", op.grid, 1), 0.25, 0.1)
    assert len(traj) == 4


def test_simulate_projects_initial_state(make_op):
    op = make_op(0.5)
    traj = simulate(op, initial_profile("constant", op.grid, 1), 0.01, 0.01)
    assert op.constraint_residual(traj.states[0]) == pytest.approx([0.0], abs=1e-10)


def test_simulate_without_projection(make_op):
    op = make_op(0.5)
    u0 = initial_profile("constant", op.grid, 1)
    traj = simulate(op, u0, 0.01, 0.01, project=False)
    assert np.array_equal(traj.states[0], u0)


def test_simulate_outflow_energy_decreases(make_op):
    op = make_op(0.0)
    traj = simulate(op, initial_profile("bump", op.grid, 1), 0.5, 0.01)

    assert np.all(np.diff(traj.energies) <= 1e-12)
    assert traj.energies[-1] < traj.energies[0]
    assert energy_monotonicity_check(traj).verdict == Verdict.PASS


def test_simulate_invalid_arguments(make_op):
    op = make_op(0.5, N=8)
    with pytest.raises(ValueError):
        simulate(op, np.zeros(op.size), 0.0, 0.1)
    with pytest.raises(ValueError):
        simulate(op, np.zeros(op.size), 1.0, -0.1)
    with pytest.raises(DimensionMismatchError):
        simulate(op, np.zeros(op.size + 1), 1.0, 0.1)
    with pytest.raises(ValueError):
        step_implicit(op, np.zeros(op.size), 0.0)


def test_contraction(make_op):
    op = make_op(0.5)
    u = simulate(op, initial_profile("bump", op.grid, 1), 0.3, 0.01)
    v = simulate(op, initial_profile("wave", op.grid, 1), 0.3, 0.01)

    report = contraction_check(u, v, op.G)

    assert report.verdict == Verdict.PASS
    assert report.residuals["final_distance"] <= report.residuals["initial_distance"]
    assert report.info["steps"] == 30


def test_energy_balance(make_op):
    op = make_op(0.5)
    dt = 0.01
    traj = simulate(op, initial_profile("wave", op.grid, 1), 0.3, dt)

    report = energy_balance_check(traj, dt, op)

    assert report.verdict == Verdict.PASS
    assert report.residuals["max_defect"] <= report.residuals["tolerance"]
    assert report.info == {"dt": dt, "N": 16}


def test_balance_tolerance_scales_with_dissipation(make_op):
    op = make_op(0.5)
    u0 = op.sample(PolyFunction.from_coefficients([[1.0, 1.0]], UNIT))
    dt = 0.01

    bu = op.A_h @ u0
    expected = 10.0 * ((dt + 1.0 / 256) * op.inner(u0, u0) + dt * op.inner(bu, bu))
    assert balance_tolerance(op, u0, dt) == pytest.approx(expected)


def test_energy_balance_defect_is_step_increment(make_op):
    op = make_op(0.5)
    dt = 0.05
    traj = simulate(op, initial_profile("wave", op.grid, 1), 0.2, dt)

    increments = np.diff(traj.states, axis=0)
    expected = np.array([op.inner(s, s) for s in increments]) / dt
    defects = -(np.diff(traj.energies) / dt + traj.fluxes[1:])

    assert defects == pytest.approx(expected, rel=1e-6, abs=1e-12)


def test_inflow_two_is_detected(make_op):
    op = make_op(2.0)
    u = simulate(op, initial_profile("constant", op.grid, 1), 0.2, 0.01)
    zero = simulate(op, np.zeros(op.size), 0.2, 0.01)

    monotone = energy_monotonicity_check(u)
    assert monotone.verdict == Verdict.FAIL
    assert monotone.witnesses[0]["increase"] > 0.0

    contraction = contraction_check(u, zero, op.G)
    assert contraction.verdict == Verdict.FAIL
    assert contraction.witnesses[0]["after"] > contraction.witnesses[0]["before"]


def test_clamp_semigroup(transport, transport_qs):
    bc = NonlinearG(ContractionFactory.create("clamp", 1, {}), label="clamp")
    op = discretize(transport, transport_qs, bc, N=12)
    u = simulate(op, initial_profile("wave", op.grid, 1), 0.2, 0.02)
    v = simulate(op, 2.0 * initial_profile("bump", op.grid, 1), 0.2, 0.02)

    assert contraction_check(u, v, op.G).verdict == Verdict.PASS
    assert energy_monotonicity_check(u).verdict == Verdict.PASS


def test_contraction_check_mismatched_trajectories(make_op):
    op = make_op(0.5, N=8)
    u = simulate(op, np.zeros(op.size), 0.2, 0.1)
    v = simulate(op, np.zeros(op.size), 0.3, 0.1)

    with pytest.raises(MismatchedTrajectoriesError, match="time grids"):
        contraction_check(u, v, op.G)

    with pytest.raises(MismatchedTrajectoriesError, match="Gram"):
        contraction_check(u, u, np.eye(3))


def test_energy_monotonicity_check():
    report = energy_monotonicity_check(trajectory([1.0, 0.5, 0.7, 0.6]))
    assert report.verdict == Verdict.FAIL
    assert report.residuals["max_increase"] == pytest.approx(0.2)
    assert report.witnesses == [{"step": 2, "increase": pytest.approx(0.2)}]


def test_energy_monotonicity_single_state():
    report = energy_monotonicity_check(trajectory([1.0]))
    assert report.verdict == Verdict.PASS
    assert report.residuals["max_increase"] == 0.0


def test_trajectory_validation():
    with pytest.raises(ValueError, match="strictly increasing"):
        Trajectory(
            times=np.array([0.0, 0.0]),
            states=np.zeros((2, 1)),
            energies=np.zeros(2),
            fluxes=np.zeros(2),
        )

    with pytest.raises(ValueError, match="inconsistent"):
        Trajectory(
            times=np.array([0.0, 1.0]),
            states=np.zeros((3, 1)),
            energies=np.zeros(2),
            fluxes=np.zeros(2),
        )


def test_trajectory_csv(make_op, tmp_path):
    op = make_op(0.5, N=8)
    traj = simulate(op, initial_profile("bump", op.grid, 1), 0.05, 0.01)
    csv_file = tmp_path / "trajectory.csv"

    traj.to_csv(csv_file)

    df = pd.read_csv(csv_file)
    assert list(df.columns) == ["time", "energy", "flux"] + [f"u{j}" for j in range(8)]
    assert len(df) == 6
    assert df["time"].to_numpy() == pytest.approx(traj.times)
    assert df["energy"].to_numpy() == pytest.approx(traj.energies)
    assert df.iloc[-1, 3:].to_numpy(dtype=float) == pytest.approx(traj.final)

    back = Trajectory.read_csv(csv_file)
    assert np.array_equal(back.states, traj.states)


def test_trajectory_csv_bad_header(tmp_path):
    csv_file = tmp_path / "bad.csv"
    csv_file.write_text("t,e,f\n0,1,0\n", encoding="utf-8")
    with pytest.raises(ValueError, match="unexpected header"):
        Trajectory.read_csv(csv_file)


def test_initial_profile():
    grid = CollocationGrid.create(9, (2.0, 4.0))

    bump = initial_profile("bump", grid, 1)
    assert bump[4] == pytest.approx(1.0)
    assert bump[0] == pytest.approx(np.exp(-25.0))

    wave = initial_profile("wave", grid, 2)
    assert wave.shape == (18,)
    assert wave[0::2] == pytest.approx(wave[1::2])
    assert np.all((wave >= 0.3 - 1e-12) & (wave <= 0.7 + 1e-12))


def test_initial_profile_unknown():
    grid = CollocationGrid.create(5, UNIT)
    with pytest.raises(ValueError, match="known: zero, bump, wave, constant"):
        initial_profile("step", grid, 1)


def test_weighted_wrap(inflow):
    ham = HamiltonianDensity.polynomial([[[1.0]], [[1.0]]])
    sys = PhsSystem.transport(UNIT, ham)
    bc = inflow(0.5)
    wrap = weighted_wrap(sys, bc)
    weighted = discretize(sys, split_system(sys), bc, N=10)
    flat = discretize(wrap.flat, split_system(wrap.flat), wrap.bc, N=10)

    assert wrap.flat.P is sys.P
    assert wrap.flat.coercivity == pytest.approx(1.0)

    u = np.random.default_rng(2).uniform(-1.0, 1.0, 10)
    v = wrap.to_flat(weighted.grid, u)

    assert wrap.from_flat(weighted.grid, v) == pytest.approx(u)
    assert weighted.inner(weighted.A_h @ u, u) == pytest.approx(
        flat.inner(flat.A_h @ v, v)
    )
    assert weighted.boundary_data(u)[0] == pytest.approx(flat.boundary_data(v)[0])
    assert weighted.constraint_residual(u) == pytest.approx(flat.constraint_residual(v))


def fine_operator(case: str):
    match case:
        case "beam":
            sys = PhsSystem.beam(UNIT)
            bc = LinearM(np.zeros((4, 4)))
        case "clamp":
            sys = PhsSystem.transport(UNIT)
            bc = NonlinearG(ContractionFactory.create("clamp", 1, {}), label="clamp")
        case _:
            sys = PhsSystem.transport(UNIT)
            bc = LinearM(np.array([[float(case)]]))
    return discretize(sys, split_system(sys), bc, N=32)


@pytest.mark.slow
@pytest.mark.parametrize("case", ["0", "0.5", "1", "beam", "clamp"])
def test_fine_step_contraction_and_balance(case):
    op = fine_operator(case)
    d = op.sys.d
    dt = 1e-3
    u = simulate(op, initial_profile("wave", op.grid, d), 1.0, dt)
    v = simulate(op, 2.0 * initial_profile("bump", op.grid, d), 1.0, dt)

    assert len(u) == 1001
    assert contraction_check(u, v, op.G).verdict == Verdict.PASS
    for traj in (u, v):
        report = energy_balance_check(traj, dt, op)
        assert report.verdict == Verdict.PASS, report.residuals


@pytest.mark.parametrize("ham", [[[2.0, 0.0], [0.0, 2.0]], [[1.0, 0.0], [0.0, 2.0]]])
@pytest.mark.parametrize("gain,verdict", [(0.5, Verdict.PASS), (2.0, Verdict.FAIL)])
def test_weighted_and_flat_verdicts_agree(ham, gain, verdict):
    sys = PhsSystem.create(
        [np.zeros((2, 2)), np.eye(2)], UNIT, HamiltonianDensity.constant(ham)
    )
    bc = LinearM(gain * np.eye(2))
    wrap = weighted_wrap(sys, bc)
    weighted = discretize(sys, split_system(sys), bc, N=12)
    flat = discretize(wrap.flat, split_system(wrap.flat), wrap.bc, N=12)

    for op in (weighted, flat):
        assert certify_accretive(op).verdict == verdict
        report = certify_m_accretive(op, mu_list=[1.0], pairs=5, seed=0)
        assert report.verdict == verdict
