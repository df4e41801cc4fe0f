import math

import numpy as np
import pytest

from phbound.bcspec import ContractionFactory, KernelW, LinearM, NonlinearG
from phbound.discrete import (
    AccretivityMode,
    CollocationGrid,
    NodeFamily,
    certify_accretive,
    certify_m_accretive,
    derive_h_from_g,
    discretize,
    random_smooth,
    resolvent_matrix,
    resolvent_norm,
    resolvent_solve,
    std_system_green_residual,
    std_system_oracle_d1,
)
from phbound.exceptions import (
    ConstructionFailedError,
    DimensionMismatchError,
    GridTooCoarseError,
    NotConvergedError,
    UnsupportedHamiltonianError,
)
from phbound.funcspace import PolyFunction
from phbound.phs import HamiltonianDensity, PhsSystem, split_system
from phbound.report import Verdict

UNIT = (0.0, 1.0)


def poly(*coeffs: list[float]) -> PolyFunction:
    return PolyFunction.from_coefficients(coeffs, UNIT)


@pytest.fixture(name="clamp_bc")
def fixture_clamp_bc() -> NonlinearG:
    return NonlinearG(ContractionFactory.create("clamp", 1, {}), label="clamp")


@pytest.mark.parametrize("family", list(NodeFamily))
@pytest.mark.parametrize("N", [3, 8, 17])
def test_grid_quadrature(family, N):
    grid = CollocationGrid.create(N, (-1.0, 2.0), family)
    assert grid.nodes[0] == pytest.approx(-1.0)
    assert grid.nodes[-1] == pytest.approx(2.0)
    assert grid.weights.sum() == pytest.approx(3.0)
    assert np.all(grid.weights > 0.0)


@pytest.mark.parametrize("family", list(NodeFamily))
def test_grid_differentiation_is_exact_on_polynomials(family):
    grid = CollocationGrid.create(10, UNIT, family)
    x = grid.nodes
    assert grid.D @ (x**5 - 2.0 * x) == pytest.approx(5.0 * x**4 - 2.0, abs=1e-9)


def test_legendre_grid_summation_by_parts():
    grid = CollocationGrid.create(12, (0.0, 2.0))
    w = np.diag(grid.weights)
    boundary = np.zeros((12, 12))
    boundary[0, 0], boundary[-1, -1] = -1.0, 1.0
    assert w @ grid.D + grid.D.T @ w == pytest.approx(boundary, abs=1e-10)


@pytest.mark.parametrize("family", list(NodeFamily))
@pytest.mark.parametrize("k", [0, 3, 9])
def test_grid_mass_integrates_products(family, k):
    grid = CollocationGrid.create(12, (0.0, 2.0), family)
    x = grid.nodes
    expected = 2.0 ** (k + 2) / (k + 2)
    assert x @ grid.mass @ x**k == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_certify_accretive_chebyshev(transport, transport_qs, inflow, alpha):
    op = discretize(
        transport, transport_qs, inflow(alpha), N=32, family=NodeFamily.CHEBYSHEV
    )
    assert op.G == pytest.approx(op.grid.mass)
    assert certify_accretive(op).verdict == Verdict.PASS


def test_chebyshev_needs_constant_density(transport_qs, inflow):
    sys = PhsSystem.transport(UNIT, HamiltonianDensity.polynomial([[[1.0]], [[1.0]]]))
    with pytest.raises(UnsupportedHamiltonianError):
        discretize(sys, transport_qs, inflow(0.5), N=8, family=NodeFamily.CHEBYSHEV)


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarseError):
        CollocationGrid.create(1, UNIT)

    with pytest.raises(GridTooCoarseError, match="minimum 6"):
        beam = PhsSystem.beam()
        discretize(beam, split_system(beam), LinearM(np.zeros((4, 4))), N=5)


def test_discretize_transport(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(0.5), N=8)
    assert op.size == 8
    assert op.is_linear
    assert op.A_h == pytest.approx(op.grid.D)
    assert np.diag(op.G) == pytest.approx(op.grid.weights)
    assert op.kernel.shape == (8, 7)


def test_discretize_weighted_transport(transport_qs, inflow):
    sys = PhsSystem.transport(UNIT, HamiltonianDensity.constant([[2.0]]))
    op = discretize(sys, transport_qs, inflow(0.5), N=8)
    assert op.A_h == pytest.approx(2.0 * op.grid.D)
    assert np.diag(op.G) == pytest.approx(2.0 * op.grid.weights)


def test_discretize_boundary_data(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(0.5), N=8)
    u = op.sample(poly([1.0, 1.0]))
    f1, f2 = op.boundary_data(u)
    assert f1 == pytest.approx([2.0])
    assert f2 == pytest.approx([1.0])
    assert op.flux(u) == pytest.approx(3.0)
    assert op.constraint_residual(u) == pytest.approx([0.0], abs=1e-12)


def test_discretize_kernel_condition(transport, transport_qs):
    op = discretize(transport, transport_qs, KernelW.of([[-0.5, 1.0]]), N=8)
    assert op.is_linear
    assert op.constraint_residual(op.sample(poly([1.0, 1.0]))) == pytest.approx(
        [0.0], abs=1e-12
    )


def test_sample_dimension_mismatch(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(0.5), N=8)
    with pytest.raises(DimensionMismatchError):
        op.sample(PolyFunction.zero(2, UNIT))


def test_certify_accretive_inflow_half(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(0.5), N=16)
    report = certify_accretive(op)
    assert report.verdict == Verdict.PASS
    assert report.info["mode"] == "linear"
    assert report.residuals["tolerance"] == pytest.approx(10.0 / 256)


def test_certify_accretive_inflow_two(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(2.0), N=16)
    report = certify_accretive(op)
    assert report.verdict == Verdict.FAIL
    assert report.residuals["min_eigenvalue"] <= -0.1

    u = report.witnesses[0]["u"]
    assert op.constraint_residual(u) == pytest.approx([0.0], abs=1e-10)
    assert op.inner(op.apply_b(u), u) < 0.0


def test_certify_accretive_beam(beam):
    qs = split_system(beam)
    op = discretize(beam, qs, LinearM(np.zeros((4, 4))), N=12)
    assert certify_accretive(op).verdict == Verdict.PASS


def test_certify_accretive_modes_agree(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(0.5), N=12)
    report = certify_accretive(op, AccretivityMode.NONLINEAR, pairs=5, seed=1)
    assert report.verdict == Verdict.PASS
    assert report.info["mode"] == "nonlinear"


def test_certify_accretive_linear_mode_needs_linear_bc(
    transport, transport_qs, clamp_bc
):
    op = discretize(transport, transport_qs, clamp_bc, N=12)
    with pytest.raises(ValueError):
        certify_accretive(op, AccretivityMode.LINEAR)


def test_resolvent_analytic(transport, transport_qs, inflow):
    # u + u' = 1 with u(0) = 0
    op = discretize(transport, transport_qs, inflow(0.0), N=16)
    u = resolvent_solve(op, 1.0, np.ones(16))
    assert u == pytest.approx(1.0 - np.exp(-op.grid.nodes), abs=1e-5)


def test_resolvent_solution_satisfies_constraint(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(0.5), N=16)
    u = resolvent_solve(op, 2.0, np.cos(3.0 * op.grid.nodes))
    assert op.constraint_residual(u) == pytest.approx([0.0], abs=1e-10)


def test_resolvent_matrix_is_cached(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(0.5), N=8)
    assert resolvent_matrix(op, 1.0) is resolvent_matrix(op, 1.0)


def test_resolvent_matrix_needs_linear_bc(transport, transport_qs, clamp_bc):
    op = discretize(transport, transport_qs, clamp_bc, N=8)
    with pytest.raises(ValueError):
        resolvent_matrix(op, 1.0)


def test_resolvent_solve_invalid_arguments(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(0.5), N=8)
    with pytest.raises(ValueError):
        resolvent_solve(op, 0.0, np.ones(8))
    with pytest.raises(DimensionMismatchError):
        resolvent_solve(op, 1.0, np.ones(7))


@pytest.mark.parametrize("mu", [0.1, 1.0, 10.0])
def test_resolvent_norm_contraction(transport, transport_qs, inflow, mu):
    op = discretize(transport, transport_qs, inflow(0.5), N=16)
    assert mu * resolvent_norm(op, mu) <= 1.0 + 1e-6


def test_certify_m_accretive_inflow_half(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(0.5), N=16)
    report = certify_m_accretive(op, pairs=5, seed=0)
    assert report.verdict == Verdict.PASS
    assert set(report.residuals) == {
        f"{kind}[mu={mu}]"
        for kind in ("resolvent_norm", "max_ratio")
        for mu in ("0.1", "1", "10")
    }


def test_certify_m_accretive_inflow_two(transport, transport_qs, inflow):
    op = discretize(transport, transport_qs, inflow(2.0), N=16)
    report = certify_m_accretive(op, mu_list=[1.0], pairs=5, seed=0)
    assert report.verdict == Verdict.FAIL
    # eigenvalue 1 - ln 2 of 1 + B
    assert report.residuals["resolvent_norm[mu=1]"] >= 3.0
    assert report.witnesses[0]["mu"] == 1.0


def test_clamp_boundary_condition(transport, transport_qs, clamp_bc):
    op = discretize(transport, transport_qs, clamp_bc, N=12)
    assert not op.is_linear
    assert certify_accretive(op, pairs=5, seed=2).verdict == Verdict.PASS
    report = certify_m_accretive(op, mu_list=[1.0], pairs=5, seed=2)
    assert report.verdict == Verdict.PASS


def test_certify_accretive_resolvent_failure(transport, transport_qs, clamp_bc, mocker):
    op = discretize(transport, transport_qs, clamp_bc, N=12)
    mocker.patch(
        "phbound.discrete.resolvent_solve",
        side_effect=NotConvergedError("Resolvent fixed point", 10, 1.0),
    )

    report = certify_accretive(op, pairs=3)

    assert report.verdict == Verdict.FAIL
    assert "did not converge" in report.witnesses[0]["error"]


def test_certify_m_accretive_resolvent_failure(
    transport, transport_qs, clamp_bc, mocker
):
    op = discretize(transport, transport_qs, clamp_bc, N=12)
    mocker.patch(
        "phbound.discrete.resolvent_solve",
        side_effect=NotConvergedError("Resolvent fixed point", 10, 1.0),
    )

    report = certify_m_accretive(op, mu_list=[0.5, 2.0], pairs=3)

    assert report.verdict == Verdict.FAIL
    assert [w["mu"] for w in report.witnesses] == [0.5, 2.0]


def test_random_smooth_is_deterministic():
    grid = CollocationGrid.create(9, UNIT)
    first = random_smooth(grid, 2, np.random.default_rng(3))
    second = random_smooth(grid, 2, np.random.default_rng(3))
    assert first.shape == (18,)
    assert np.array_equal(first, second)


def test_std_oracle_constant():
    e = math.e
    decomposition = std_system_oracle_d1(UNIT, poly([1.0]))
    assert decomposition.pi1_coeff == pytest.approx(1.0 / (1.0 + e))
    assert decomposition.pim1_coeff == pytest.approx(e / (1.0 + e))
    assert decomposition.residual_traces == pytest.approx((0.0, 0.0), abs=1e-10)


@pytest.mark.parametrize(
    "interval,coeffs",
    [
        ((0.0, 1.0), [0.3, -1.0, 2.0]),
        ((-1.0, 1.0), [1.0, 0.0, 0.0, 1.0]),
        ((2.0, 3.5), [0.0, 1.0]),
    ],
)
def test_std_oracle_remainder_vanishes(interval, coeffs):
    u = PolyFunction.from_coefficients([coeffs], interval)
    decomposition = std_system_oracle_d1(interval, u)
    assert decomposition.residual_traces == pytest.approx((0.0, 0.0), abs=1e-9)


def test_std_green_residual():
    residual = std_system_green_residual(UNIT, poly([0.0, 1.0]), poly([1.0, 0.0, 1.0]))
    assert residual == pytest.approx(0.0, abs=1e-10)


def test_std_oracle_interval_too_long():
    with pytest.raises(ValueError):
        std_system_oracle_d1((0.0, 5.0), poly([1.0]))


def test_std_oracle_needs_scalar_function():
    with pytest.raises(DimensionMismatchError):
        std_system_oracle_d1(UNIT, poly([1.0], [1.0]))


def test_derive_h_from_contraction():
    derived = derive_h_from_g(UNIT, lambda x: 0.5 * x, [-1.0, 0.0, 0.5, 1.0], seed=4)
    assert derived.report.verdict == Verdict.PASS
    assert derived.spreads == pytest.approx(np.zeros(4), abs=1e-6)
    assert derived.values[1] == pytest.approx(0.0, abs=1e-9)
    assert derived.report.residuals["max_ratio"] < 1.0


def test_derive_h_from_clamp():
    clamp = ContractionFactory.create("clamp", 1, {"lower": -0.2, "upper": 0.2})
    derived = derive_h_from_g(UNIT, clamp, np.linspace(-1.0, 1.0, 5), seed=4)
    assert derived.report.verdict == Verdict.PASS


def test_derive_h_from_expansion():
    derived = derive_h_from_g(UNIT, lambda x: 2.0 * x, [-1.0, 1.0], seed=4)
    assert derived.report.verdict == Verdict.FAIL
    assert derived.report.residuals["max_ratio"] > 1.0


def test_derive_h_construction_fails():
    with pytest.raises(ConstructionFailedError):
        derive_h_from_g(UNIT, lambda x: 3.0 * x, [1.0], seed=4)


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_certify_m_accretive_fine_grid(transport, transport_qs, inflow, alpha):
    op = discretize(transport, transport_qs, inflow(alpha), N=32)
    report = certify_m_accretive(op, pairs=20, seed=0)
    assert report.verdict == Verdict.PASS
    for mu in (0.1, 1, 10):
        assert report.residuals[f"resolvent_norm[mu={mu}]"] <= 1.0 + 1e-6
        assert report.residuals[f"max_ratio[mu={mu}]"] <= 1.0 + 1e-6


@pytest.mark.slow
def test_std_oracle_random_polynomials():
    rng = np.random.default_rng(9)
    functions = [
        poly(rng.uniform(-1.0, 1.0, rng.integers(1, 12)).tolist()) for _ in range(50)
    ]
    for u, v in zip(functions, functions[1:] + functions[:1]):
        traces = std_system_oracle_d1(UNIT, u).residual_traces
        assert traces == pytest.approx((0.0, 0.0), abs=1e-8)
        assert std_system_green_residual(UNIT, u, v) <= 1e-8


@pytest.mark.parametrize(
    "g",
    [
        lambda x: 0.0 * x,
        lambda x: 0.5 * x,
        lambda x: 1.0 * x,
        ContractionFactory.create("clamp", 1, {"lower": -0.2, "upper": 0.2}),
    ],
)
def test_derive_h_on_ten_points(g):
    derived = derive_h_from_g(UNIT, g, np.linspace(-2.0, 2.0, 10), seed=4)
    assert derived.spreads == pytest.approx(np.zeros(10), abs=1e-6)
    assert derived.report.verdict == Verdict.PASS
