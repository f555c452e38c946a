import numpy as np
import pytest

from crlab.bundle import HermitianMetricField
from crlab.elliptic import (BoundsReport, PoissonProblem, YamabeProblem,
                            mass_matrix, maximum_principle_bounds,
                            poisson_residual, solve_hermitian_metric,
                            solve_poisson, stiffness_matrix, yamabe_newton)
from crlab.errors import (DegenerateInputError, NonconvergenceError,
                          SolvabilityError)
from crlab.mesh import (SectionField, build_mesh, hyperbolic_area, quadrature)
from crlab.mobius import fuchsian_group
from crlab.sections import Bump, bump_field, interior_bumps


@pytest.fixture(scope="module")
def mesh2():
    return build_mesh(fuchsian_group(2, 1), 2)


@pytest.fixture(scope="module")
def mesh3():
    return build_mesh(fuchsian_group(2, 1), 3)


def test_stiffness_matrix_structure(mesh2):
    K = stiffness_matrix(mesh2).toarray()
    assert np.allclose(K, K.T, atol=1e-12)
    # constants span the kernel
    assert np.linalg.norm(K @ np.ones(mesh2.n_quotient)) < 1e-10
    w = np.linalg.eigvalsh(K)
    assert w[0] > -1e-12
    assert w[1] > 1e-6


def test_mass_matrix_total_converges_to_area(mesh2, mesh3):
    # flat-triangle midpoint rule: total mass reaches the area at order 2
    def rel(mesh):
        M = mass_matrix(mesh)
        one = np.ones(mesh.n_quotient)
        area = hyperbolic_area(mesh)
        return abs(one @ (M @ one) - area) / area

    r2, r3 = rel(mesh2), rel(mesh3)
    assert r2 < 0.06
    assert r3 < r2 / 3.0


def _balanced_bump_source(mesh, seed=0):
    rng = np.random.default_rng(seed)
    bumps = interior_bumps(mesh.group, 2, rng, profile="quartic")
    f = bump_field(mesh, bumps, (0, 0))
    vals = np.real(f.values)
    # subtract the quadrature mean so the source is exactly balanced
    one = SectionField(mesh, (0, 0), np.ones(mesh.n_quotient))
    vals = vals - float(np.real(quadrature(f))) / hyperbolic_area(mesh)
    return SectionField(mesh, (0, 0), vals.astype(complex))


def test_poisson_solves_balanced_source(mesh2, mesh3):
    # the residual against the raw rhs carries the quadrature-rule
    # discrepancy of the internal rebalancing, an order-2 quantity
    def resid(mesh):
        p = PoissonProblem(mesh, _balanced_bump_source(mesh))
        u = solve_poisson(p)
        assert np.real(u.values[0]) == pytest.approx(0.0, abs=1e-13)
        return poisson_residual(p, u)

    r2, r3 = resid(mesh2), resid(mesh3)
    assert r2 < 0.03
    assert r3 < r2 / 3.0


def test_poisson_rejects_unbalanced_source(mesh2):
    f = SectionField(mesh2, (0, 0), np.ones(mesh2.n_quotient, dtype=complex))
    with pytest.raises(SolvabilityError):
        solve_poisson(PoissonProblem(mesh2, f))


def test_hermitian_metric_recovers_model(mesh2, mesh3):
    # start from a perturbed log metric; the solve must return minus the
    # perturbation up to discretization
    def recover(mesh):
        h_model = HermitianMetricField.model(mesh, 1.0)
        z = mesh.vertices[mesh.rep_vertices]
        bump = Bump(0.05 + 0.02j, 0.5, amplitude=0.08, profile="quartic")
        pert = np.real(bump.values(z))
        pert = pert - pert[0]  # normalization vertex pinned at zero
        h0 = HermitianMetricField(mesh, h_model.log_h + pert, 1.0)
        u = solve_hermitian_metric(mesh, h0, 1)
        return np.max(np.abs(np.real(u.values) + pert))

    e2, e3 = recover(mesh2), recover(mesh3)
    assert e3 < 0.02
    assert e3 < e2 / 1.8


def test_hermitian_metric_degree_gate(mesh2):
    h_model = HermitianMetricField.model(mesh2, 1.0)
    with pytest.raises(SolvabilityError):
        solve_hermitian_metric(mesh2, h_model, 3)


def test_yamabe_converges_from_perturbed_start(mesh3):
    rng = np.random.default_rng(21)
    R_hat = SectionField(mesh3, (0, 0), -np.ones(mesh3.n_quotient))
    u0 = SectionField(mesh3, (0, 0),
                      1.0 + 0.3 * rng.uniform(-1, 1, mesh3.n_quotient))
    u, info = yamabe_newton(YamabeProblem(mesh3, R_hat), u0)
    assert np.max(np.abs(u.values - 1.0)) < 1e-8
    assert info["iterations"] <= 12
    assert info["history"][-1] < info["history"][0]


def test_yamabe_nonconstant_curvature(mesh2):
    # a gently varying negative curvature still admits a positive solution
    z = mesh2.vertices[mesh2.rep_vertices]
    R_hat = SectionField(mesh2, (0, 0),
                         -(1.0 + 0.2 * np.exp(-4 * np.abs(z) ** 2)))
    u0 = SectionField(mesh2, (0, 0), np.ones(mesh2.n_quotient))
    u, _ = yamabe_newton(YamabeProblem(mesh2, R_hat), u0)
    report = maximum_principle_bounds(u, R_hat)
    assert isinstance(report, BoundsReport)
    assert report.passed
    # solution must exceed 1 where curvature is more negative than target
    assert np.max(np.real(u.values)) > 1.0


def test_yamabe_nonconvergence_raises(mesh2):
    rng = np.random.default_rng(22)
    R_hat = SectionField(mesh2, (0, 0), -np.ones(mesh2.n_quotient))
    u0 = SectionField(mesh2, (0, 0),
                      1.0 + 0.3 * rng.uniform(-1, 1, mesh2.n_quotient))
    with pytest.raises(NonconvergenceError) as err:
        yamabe_newton(YamabeProblem(mesh2, R_hat), u0, max_iters=1,
                      tol=1e-14)
    assert err.value.history


def test_bounds_need_negative_curvature(mesh2):
    u = SectionField(mesh2, (0, 0), np.ones(mesh2.n_quotient))
    R_pos = SectionField(mesh2, (0, 0), np.ones(mesh2.n_quotient))
    with pytest.raises(DegenerateInputError):
        maximum_principle_bounds(u, R_pos)


def test_bounds_flag_violations(mesh2):
    R_hat = SectionField(mesh2, (0, 0), -np.ones(mesh2.n_quotient))
    too_big = SectionField(mesh2, (0, 0),
                           1.5 * np.ones(mesh2.n_quotient))
    report = maximum_principle_bounds(too_big, R_hat)
    assert not report.passed
    assert report.upper_margin < 0
