"""Scalar elliptic solvers on the quotient surface.

Sign convention, fixed here once: the assembled stiffness K is the positive
semidefinite cotangent matrix, and the discrete Laplacian is A = -K (the
negative semidefinite operator), so the curvature normal form reads
4 A u + M (R_hat u) + M u^3 = 0 and the metric Poisson equation
(1/2) A u = M Sigma.  All residuals in this module are stated against these
forms.  The Dirichlet integrand is conformally invariant in two dimensions,
so K carries no density; the mass matrix M integrates against rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (ConstructionError, DegenerateInputError,
                     NonconvergenceError, SolvabilityError)
from .mesh import SurfaceMesh, SectionField, hyperbolic_area, quadrature
from .bundle import HermitianMetricField
from .fit import affine_scalar_derivatives

__all__ = [
    "stiffness_matrix",
    "mass_matrix",
    "PoissonProblem",
    "solve_poisson",
    "poisson_residual",
    "solve_hermitian_metric",
    "YamabeProblem",
    "yamabe_newton",
    "BoundsReport",
    "maximum_principle_bounds",
]


def stiffness_matrix(mesh: SurfaceMesh) -> sp.csr_matrix:
    """P1 cotangent stiffness, assembled on quotient indices.  PSD; kernel
    is exactly the constants."""
    cached = getattr(mesh, "_stiffness", None)
    if cached is not None:
        return cached
    tri = mesh.triangles
    pa = mesh.vertices[tri[:, 0]]
    pb = mesh.vertices[tri[:, 1]]
    pc = mesh.vertices[tri[:, 2]]
    area = 0.5 * np.imag(np.conj(pb - pa) * (pc - pa))
    # edge vector opposite each vertex, cyclic
    e0, e1, e2 = pc - pb, pa - pc, pb - pa
    edges = np.stack([e0, e1, e2], axis=1)
    qof = mesh.quotient_of
    n = mesh.n_quotient
    rows, cols, vals = [], [], []
    for j in range(3):
        for k in range(3):
            rows.append(qof[tri[:, j]])
            cols.append(qof[tri[:, k]])
            vals.append(np.real(np.conj(edges[:, j]) * edges[:, k])
                        / (4.0 * area))
    K = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    mesh._stiffness = K
    return K


def mass_matrix(mesh: SurfaceMesh) -> sp.csr_matrix:
    """Lumped-free P1 mass against the hyperbolic density rho."""
    M = mesh.section_gram((0, 0))
    return sp.csr_matrix(M.real)


@dataclass(frozen=True)
class PoissonProblem:
    mesh: SurfaceMesh
    rhs: SectionField  # weight (0,0), the compatibility-constrained source
    normalization: int = 0  # quotient vertex index pinned to zero


def _real_values(f: SectionField) -> np.ndarray:
    vals = np.asarray(f.values)
    return np.real(vals).astype(float)


def solve_poisson(p: PoissonProblem) -> SectionField:
    """Solve (1/2) A u = M Sigma with u pinned at the normalization vertex.

    The solvability gate checks |integral of Sigma| <= 1e-8 * area; the
    discrete mean (w.r.t. the mass matrix) is then removed to roundoff so
    the pinned reduced system is exactly compatible.
    """
    mesh = p.mesh
    if p.rhs.weight != (0, 0):
        raise SolvabilityError("rhs must be a weight-(0,0) field")
    area = hyperbolic_area(mesh)
    total = complex(quadrature(p.rhs))
    if abs(total) > 1e-8 * area:
        raise SolvabilityError(
            f"source integral {total.real:.3e} exceeds solvability "
            f"tolerance {1e-8 * area:.3e}; the two curvature densities "
            f"represent different line-bundle degrees")
    K = stiffness_matrix(mesh)
    M = mass_matrix(mesh)
    sigma = _real_values(p.rhs)
    b = -2.0 * (M @ sigma)
    one = np.ones(mesh.n_quotient)
    b = b - (one @ b) / (one @ (M @ one)) * (M @ one)

    pin = int(p.normalization)
    keep = np.ones(mesh.n_quotient, dtype=bool)
    keep[pin] = False
    u = np.zeros(mesh.n_quotient)
    u[keep] = spla.spsolve(K[keep][:, keep].tocsc(), b[keep])

    res = np.linalg.norm(K @ u - b)
    scale = np.linalg.norm(b)
    if scale > 0 and res / scale > 1e-10:
        raise ConstructionError(
            f"linear solve residual {res / scale:.3e} above 1e-10")
    return SectionField(mesh, (0, 0), u.astype(complex))


def poisson_residual(p: PoissonProblem, u: SectionField) -> float:
    """Relative discrete residual ||(1/2)A u - M Sigma|| / ||M Sigma||."""
    K = stiffness_matrix(p.mesh)
    M = mass_matrix(p.mesh)
    lhs = -0.5 * (K @ _real_values(u))
    rhs = M @ _real_values(p.rhs)
    denom = np.linalg.norm(rhs)
    if denom == 0.0:
        return float(np.linalg.norm(lhs))
    return float(np.linalg.norm(lhs - rhs) / denom)


def solve_hermitian_metric(mesh: SurfaceMesh, log_h0: HermitianMetricField,
                           m: int, normalization: int = 0) -> SectionField:
    """Conformal factor making h0 e^{u} the canonical bundle metric.

    Assembles Sigma = m/(2g-2) - (2/rho) d_z d_zbar log h0 pointwise from
    law-aware derivative fits (a weak-form assembly drops the topological
    boundary term of the fundamental domain, so it cannot detect a degree
    mismatch).  A mismatch gate at 5e-2 per unit area rejects wrong-degree
    inputs (the smallest possible mismatch is m/(2g-2) >= 1/4 per unit
    area); the surviving fit noise in the mean is projected out before the
    strict Poisson solve.
    """
    g = mesh.genus
    _, ddb = affine_scalar_derivatives(mesh, log_h0.log_h, log_h0.e)
    # chart second derivative: (2/rho) d d-bar log h0 = ddb/2
    sigma = m / (2.0 * g - 2.0) - ddb / 2.0
    area = hyperbolic_area(mesh)
    f = SectionField(mesh, (0, 0), sigma.astype(complex))
    total = complex(quadrature(f)).real
    if abs(total) > 5e-2 * area:
        raise SolvabilityError(
            f"mean curvature mismatch {total / area:.3e} per unit area: "
            f"h0 does not have the degree required by m = {m}")
    sigma = sigma - total / area
    f = SectionField(mesh, (0, 0), sigma.astype(complex))
    return solve_poisson(PoissonProblem(mesh, f, normalization))


@dataclass(frozen=True)
class YamabeProblem:
    mesh: SurfaceMesh
    R_hat: SectionField  # weight (0,0), real, negative
    R_target: float = -1.0


def _yamabe_residual(K, M, rhat, rtarget, u):
    return -4.0 * (K @ u) + M @ (rhat * u) - rtarget * (M @ u ** 3)


def yamabe_newton(p: YamabeProblem, u0: SectionField, max_iters: int = 50,
                  tol: float = 1e-10):
    """Damped Newton for 4 A u + M(R_hat u) - R_target M(u^3) = 0, u > 0.

    Halving line search on the residual norm; a step that would lose
    positivity is shortened.  Returns (u field, info dict with the residual
    history and iteration count).  Raises NonconvergenceError when the
    budget or the line search is exhausted.
    """
    mesh = p.mesh
    K = stiffness_matrix(mesh)
    M = mass_matrix(mesh)
    rhat = _real_values(p.R_hat)
    u = _real_values(u0)
    if np.any(u <= 0):
        raise DegenerateInputError("initial iterate must be positive")

    def rel(r, u):
        scale = (np.linalg.norm(4.0 * (K @ u)) + np.linalg.norm(M @ (rhat * u))
                 + np.linalg.norm(M @ u ** 3))
        return np.linalg.norm(r) / scale

    history = []
    r = _yamabe_residual(K, M, rhat, p.R_target, u)
    for it in range(max_iters):
        history.append(float(rel(r, u)))
        if history[-1] < tol:
            info = {"iterations": it, "history": history}
            return SectionField(mesh, (0, 0), u.astype(complex)), info
        J = (-4.0 * K
             + M @ sp.diags(rhat)
             - 3.0 * p.R_target * (M @ sp.diags(u ** 2)))
        delta = spla.spsolve(sp.csc_matrix(J), -r)
        t = 1.0
        rn = np.linalg.norm(r)
        ok = False
        for _ in range(40):
            cand = u + t * delta
            if np.min(cand) > 0:
                rc = _yamabe_residual(K, M, rhat, p.R_target, cand)
                if np.linalg.norm(rc) <= (1.0 - 1e-4 * t) * rn:
                    u, r = cand, rc
                    ok = True
                    break
            t *= 0.5
        if not ok:
            raise NonconvergenceError(
                "line search exhausted without residual decrease",
                history=history)
    raise NonconvergenceError(
        f"no convergence in {max_iters} Newton steps", history=history)


@dataclass(frozen=True)
class BoundsReport:
    lower_margin: float  # min u - sqrt(min(-R_hat))
    upper_margin: float  # sqrt(max(-R_hat)) - max u
    passed: bool


def maximum_principle_bounds(u: SectionField, R_hat: SectionField,
                             tol: float = 1e-6) -> BoundsReport:
    """Check sqrt((-R)_min) <= min u and max u <= sqrt((-R)_max)."""
    rv = _real_values(R_hat)
    if np.any(rv >= 0):
        raise DegenerateInputError(
            "curvature bound checks need pointwise negative R_hat")
    uv = _real_values(u)
    lower = float(np.min(uv) - np.sqrt(np.min(-rv)))
    upper = float(np.sqrt(np.max(-rv)) - np.max(uv))
    return BoundsReport(lower, upper, lower >= -tol and upper >= -tol)
