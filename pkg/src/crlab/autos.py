"""Bundle automorphisms built from infinitesimal data.

The chart sends a pair (vector field, fiber exponent) to a bundle map: the
base point flows along the time-1 hyperbolic geodesic of the vector field,
the fiber is moved by parallel transport along that geodesic and then
corrected by the pointwise exponent.  The inverse recovers both components
in closed form, so the round trip is limited only by the transport
quadrature.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (ConstructionError, GeometryDomainError,
                     NonconvergenceError, UnsupportedError, WeightError)
from .mesh import SurfaceMesh, SectionField
from .mobius import MobiusElement
from .bundle import model_group_action
from .deformation import ConnectionField

__all__ = [
    "geodesic", "geodesic_velocity", "geodesic_log", "parallel_factor",
    "InfinitesimalAuto", "BundleAutoSample", "sigma_map", "sigma_inverse",
    "seam_residual", "injectivity_bound",
]


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------


def _check_point(p: complex) -> complex:
    p = complex(p)
    if abs(p) >= 1.0:
        raise GeometryDomainError(f"point |z| = {abs(p):.6f} outside the disk")
    return p


def geodesic(p, v, t: float) -> complex:
    """Disk geodesic with z(0) = p and coordinate velocity dz/dt(0) = v.

    Closed form: move p to the origin by a disk isometry, where geodesics
    are Euclidean rays traversed as tanh of the rescaled velocity, and move
    back.  The parametrization depends only on the coordinate velocity, not
    on the curvature normalization.
    """
    p = _check_point(p)
    v = complex(v)
    if v == 0:
        return p
    v0 = v / (1.0 - abs(p) ** 2)
    zeta = (v0 / abs(v0)) * np.tanh(abs(v0) * t)
    return (zeta + p) / (1.0 + np.conj(p) * zeta)


def geodesic_velocity(p, v, t: float) -> complex:
    """Coordinate velocity dz/dt along geodesic(p, v, t)."""
    p = _check_point(p)
    v = complex(v)
    if v == 0:
        return 0j
    v0 = v / (1.0 - abs(p) ** 2)
    u = v0 / abs(v0)
    th = np.tanh(abs(v0) * t)
    dzeta = u * abs(v0) * (1.0 - th ** 2)
    # image of the ray under the isometry, chain rule through its derivative
    return dzeta * (1.0 - abs(p) ** 2) / (1.0 + np.conj(p) * u * th) ** 2


def geodesic_log(p, q) -> complex:
    """Initial velocity v with geodesic(p, v, 1) = q (time-1 inverse)."""
    p = _check_point(p)
    q = _check_point(q)
    zeta = (q - p) / (1.0 - np.conj(p) * q)
    a = abs(zeta)
    if a == 0.0:
        return 0j
    return np.arctanh(a) * (zeta / a) * (1.0 - abs(p) ** 2)


def injectivity_bound(group) -> float:
    """Half the minimal hyperbolic side length of the fundamental polygon."""
    corners = group.corners
    n = len(corners)
    best = np.inf
    for i in range(n):
        c1, c2 = corners[i], corners[(i + 1) % n]
        d = abs((c1 - c2) / (1.0 - np.conj(c1) * c2))
        best = min(best, 2.0 * np.arctanh(d))
    return 0.5 * float(best)


# ---------------------------------------------------------------------------
# Parallel transport
# ---------------------------------------------------------------------------


def _adaptive_simpson(f, a: float, b: float, tol: float, max_depth: int = 40):
    """Complex-valued adaptive Simpson rule on [a, b]."""
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, m, b, fa, fm, fb, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        if depth >= max_depth:
            raise NonconvergenceError(
                f"transport quadrature stalled at depth {depth} "
                f"(residual {abs(left + right - whole):.3e})")
        return (recurse(a, lm, m, fa, flm, fm, left, tol / 2.0, depth + 1)
                + recurse(m, rm, b, fm, frm, fb, right, tol / 2.0, depth + 1))

    return recurse(a, m, b, fa, fm, fb, whole, tol, 0)


def _model_gamma(conn: ConnectionField):
    """Closed-form evaluator of the connection, rejecting non-model fields.

    Transport integrates the connection off the vertex set, which is only
    available in closed form; fitted connections from perturbed metrics are
    not supported here.
    """
    z = conn.mesh.vertices[conn.mesh.rep_vertices]
    ref = conn.e * np.conj(z) / (1.0 - np.abs(z) ** 2)
    dev = np.abs(conn.gamma - ref).max()
    if dev > 1e-8 * max(1.0, np.abs(ref).max()):
        raise UnsupportedError(
            f"connection deviates from the closed-form family by {dev:.3e}; "
            "transport off the vertex set is not available for it")
    e = conn.e
    return lambda z: e * np.conj(z) / (1.0 - abs(z) ** 2)


def parallel_factor(conn: ConnectionField, p, v, tol: float = 1e-10) -> complex:
    """Fiber factor exp(-int_0^1 Gamma(dgamma/dt) dt) along geodesic(p, v, .)."""
    p = _check_point(p)
    v = complex(v)
    if v == 0:
        return 1.0 + 0j
    gam = _model_gamma(conn)

    def integrand(t):
        return gam(geodesic(p, v, t)) * geodesic_velocity(p, v, t)

    return complex(np.exp(-_adaptive_simpson(integrand, 0.0, 1.0, tol)))


# ---------------------------------------------------------------------------
# The chart and its inverse
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InfinitesimalAuto:
    """Infinitesimal bundle automorphism (v1, v*) on the quotient vertices.

    v1 is the vector-field component, weight (-1, 0).  vstar is stored as a
    raw array because its deck law is affine (it shifts by v1 times the
    logarithmic derivative of the gluing factor), not a plain weight; the
    combination vstar + Gamma v1 is an ordinary function.
    """

    v1: SectionField
    vstar: np.ndarray
    conn: ConnectionField

    def __post_init__(self):
        if self.v1.weight != (-1, 0):
            raise WeightError(f"v1 must have weight (-1, 0), got {self.v1.weight}")
        if self.conn.mesh is not self.v1.mesh:
            raise ConstructionError("connection assembled on a different mesh")
        vs = np.asarray(self.vstar, dtype=complex)
        if vs.shape != (self.v1.mesh.n_quotient,):
            raise ConstructionError(
                f"vstar has shape {vs.shape}, expected ({self.v1.mesh.n_quotient},)")
        object.__setattr__(self, "vstar", vs)

    @property
    def mesh(self) -> SurfaceMesh:
        return self.v1.mesh

    def sup_norm(self) -> float:
        return float(max(np.abs(self.v1.values).max(),
                         np.abs(self.vstar).max()))


@dataclass(frozen=True)
class BundleAutoSample:
    """Per-vertex samples (base image point, fiber factor) of a bundle map."""

    mesh: SurfaceMesh
    conn: ConnectionField
    base: np.ndarray
    fiber_factor: np.ndarray

    def __post_init__(self):
        base = np.asarray(self.base, dtype=complex)
        fib = np.asarray(self.fiber_factor, dtype=complex)
        n = self.mesh.n_quotient
        if base.shape != (n,) or fib.shape != (n,):
            raise ConstructionError("sample arrays must match the quotient size")
        if np.abs(fib).min() == 0.0:
            raise ConstructionError("fiber factor vanishes at a vertex")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "fiber_factor", fib)


def _speed_gate(z, v, bound: float):
    speed = 2.0 * np.abs(v) / (1.0 - np.abs(z) ** 2)
    worst = float(speed.max())
    if worst > bound:
        raise GeometryDomainError(
            f"vector field speed {worst:.4f} exceeds the chart bound {bound}")


def sigma_map(X: InfinitesimalAuto, bound: float = 0.1,
              tol: float = 1e-10) -> BundleAutoSample:
    """Bundle map samples of the automorphism generated by X.

    Base: time-1 geodesic of v1.  Fiber: parallel transport along that
    geodesic times exp(v* + Gamma(v1)), which is the trivialization-free
    combination.  bound caps the hyperbolic speed of v1.
    """
    mesh = X.mesh
    z = mesh.vertices[mesh.rep_vertices]
    v = X.v1.values
    _speed_gate(z, v, bound)
    base = np.array([geodesic(z[i], v[i], 1.0) for i in range(len(z))])
    transport = np.array([parallel_factor(X.conn, z[i], v[i], tol=tol)
                          for i in range(len(z))])
    factor = transport * np.exp(X.vstar + X.conn.gamma * v)
    return BundleAutoSample(mesh, X.conn, base, factor)


def sigma_inverse(phi: BundleAutoSample, bound: float = 0.1,
                  tol: float = 1e-10) -> InfinitesimalAuto:
    """Recover (v1, v*) from bundle map samples.

    v1 inverts the time-1 geodesic in closed form; v* removes the transport
    integral and the endpoint connection term from the principal log of the
    fiber factor, so it is exact on the ball where that log is principal.
    """
    mesh = phi.mesh
    z = mesh.vertices[mesh.rep_vertices]
    v = np.array([geodesic_log(z[i], phi.base[i]) for i in range(len(z))])
    _speed_gate(z, v, bound)
    gam = _model_gamma(phi.conn)
    corr = np.empty(len(z), dtype=complex)
    for i in range(len(z)):
        if v[i] == 0:
            corr[i] = 0j
            continue
        corr[i] = _adaptive_simpson(
            lambda t: gam(geodesic(z[i], v[i], t)) * geodesic_velocity(z[i], v[i], t),
            0.0, 1.0, tol)
    vstar = np.log(phi.fiber_factor) - phi.conn.gamma * v + corr
    return InfinitesimalAuto(SectionField(mesh, (-1, 0), v), vstar, phi.conn)


def seam_residual(X: InfinitesimalAuto, tol: float = 1e-10) -> dict:
    """Worst trivialization-change mismatch of sigma_map(X) across pairings.

    For each paired boundary vertex the samples are recomputed directly in
    the neighbor trivialization and compared with the deck-transported
    representative samples; the base uses Mobius equivariance, the fiber the
    bundle action.  Requires integer e (the bundle action is single-valued).
    """
    mesh = X.mesh
    conn = X.conn
    phi = sigma_map(X, tol=tol)
    gam = _model_gamma(conn)
    worst_base = 0.0
    worst_fiber = 0.0
    for vtx, (_, M) in mesh.pairings.items():
        zv = mesh.vertices[vtx]
        i = int(mesh.quotient_of[vtx])
        dv = M.deriv(zv)
        v_here = X.v1.values[i] / dv
        base_direct = geodesic(zv, v_here, 1.0)
        base_deck = M.inverse().apply(phi.base[i])
        worst_base = max(worst_base, abs(base_direct - base_deck))
        if conn.e != int(np.round(conn.e)):
            raise UnsupportedError(
                f"seam fiber check needs integer e, got {conn.e}")
        # the stored value sits at the representative M(zv); the chart
        # change adds v * (log gluing)' there, so subtract it to land here
        vstar_here = X.vstar[i] - v_here * _gluing_log_deriv(M, zv, conn.e)
        transport = (1.0 + 0j if v_here == 0 else complex(np.exp(
            -_adaptive_simpson(
                lambda t: gam(geodesic(zv, v_here, t))
                * geodesic_velocity(zv, v_here, t), 0.0, 1.0, tol))))
        factor_direct = transport * np.exp(vstar_here + gam(zv) * v_here)
        _, u_at_z = model_group_action(M, zv, 1.0, conn.e)
        _, u_at_phi = model_group_action(M, base_direct, 1.0, conn.e)
        factor_deck = phi.fiber_factor[i] * u_at_z / u_at_phi
        worst_fiber = max(worst_fiber, abs(factor_direct - factor_deck))
    return {"base": worst_base, "fiber": worst_fiber}


def _gluing_log_deriv(M: MobiusElement, z: complex, e: float) -> complex:
    """d/dz log of the fiber gluing factor phase/(cz+d)^e."""
    return -e * M.c / (M.c * z + M.d)
