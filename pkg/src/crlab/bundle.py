"""Hermitian metrics on the line bundle and the unit circle bundle.

The reference family is h(z) = (1-|z|^2)^(-e) on the disk with e = m/(g-1);
its log obeys the additive deck law log h(z) = log h(gz) + e log|g'(z)|.
The induced connection coefficient is Gamma = d_z log h and the curvature
identity reads d_z d_zbar log h = e rho / 4 with rho the hyperbolic density.

The contact form on the unit bundle h(z)|w|^2 = 1 is stored through its
(dz, dw) components (-i kappa/2) (Gamma, 1/w); pairing with the fiber
rotation generator gives exactly kappa, and the dz dzbar component of
d theta matches the pulled-back area form when kappa Re(dbar Gamma) = rho/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (CertificateError, GeometryDomainError, UnsupportedError)
from .mobius import MobiusElement
from .mesh import SurfaceMesh, SectionField, rho, evaluate_log_metric
from .fit import affine_scalar_derivatives

__all__ = [
    "model_metric",
    "bundle_norm",
    "kappa_constant",
    "ModelMetric",
    "HermitianMetricField",
    "ContactFormSample",
    "contact_form",
    "verify_curvature_identity",
    "contact_exactness_residual",
    "model_group_action",
    "TWCurvatureResult",
    "reduced_tw_curvature",
]


def _check_disk(z):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1.0):
        raise GeometryDomainError("point outside the open unit disk")
    return z


def model_metric(z, e: float):
    """Reference metric value h(z) = (1-|z|^2)^(-e) on the w=1 section."""
    z = _check_disk(z)
    return (1.0 - np.abs(z) ** 2) ** (-e)


def bundle_norm(z, w, e: float):
    """Squared norm |w|^2 / (1-|z|^2)^e of a bundle point."""
    z = _check_disk(z)
    return np.abs(w) ** 2 * (1.0 - np.abs(z) ** 2) ** (-e)


def kappa_constant(genus: int, m: int) -> float:
    """Contact normalization 2(g-1)/m."""
    return 2.0 * (genus - 1) / m


class ModelMetric:
    """Closed forms of the reference metric for a given exponent e."""

    def __init__(self, e: float):
        self.e = float(e)

    def log_h(self, z):
        z = _check_disk(z)
        return -self.e * np.log(1.0 - np.abs(z) ** 2)

    def h(self, z):
        return model_metric(z, self.e)

    def gamma(self, z):
        """Connection coefficient d_z log h = e conj(z)/(1-|z|^2)."""
        z = _check_disk(z)
        return self.e * np.conj(z) / (1.0 - np.abs(z) ** 2)

    def dz_dzbar_log_h(self, z):
        z = _check_disk(z)
        return self.e / (1.0 - np.abs(z) ** 2) ** 2


@dataclass
class HermitianMetricField:
    """log of a hermitian metric sampled at quotient vertices.

    Stored relative to the disk trivialization; values extend to the whole
    domain by the additive law with exponent e.  automorphy_residual records
    the worst seam mismatch when the field was built from raw per-domain
    samples (0 when built from quotient data, where the law is structural).
    """

    mesh: SurfaceMesh
    log_h: np.ndarray
    e: float
    automorphy_residual: float = 0.0

    def __post_init__(self):
        self.log_h = np.asarray(self.log_h, dtype=float)
        if self.log_h.shape != (self.mesh.n_quotient,):
            raise ValueError(
                f"expected {self.mesh.n_quotient} quotient values, "
                f"got {self.log_h.shape}")

    @classmethod
    def model(cls, mesh: SurfaceMesh, e: float) -> "HermitianMetricField":
        z = mesh.vertices[mesh.rep_vertices]
        return cls(mesh, -e * np.log(1.0 - np.abs(z) ** 2), float(e))

    @classmethod
    def from_domain_values(cls, mesh: SurfaceMesh, values, e: float):
        """Build from one value per domain vertex, checking the deck law."""
        values = np.asarray(values, dtype=float)
        if values.shape != (len(mesh.vertices),):
            raise ValueError("need one value per domain vertex")
        quot = values[mesh.rep_vertices]
        worst = 0.0
        for v, (rep, gamma) in mesh.pairings.items():
            want = quot[mesh.quotient_of[rep]] + e * np.log(
                abs(gamma.deriv(mesh.vertices[v])))
            worst = max(worst, abs(values[v] - want))
        return cls(mesh, quot, float(e), automorphy_residual=worst)

    def domain_values(self) -> np.ndarray:
        vals = self.log_h[self.mesh.quotient_of].copy()
        for v, (rep, gamma) in self.mesh.pairings.items():
            vals[v] += self.e * np.log(abs(gamma.deriv(self.mesh.vertices[v])))
        return vals

    def sample(self, z):
        """Interpolated log h at arbitrary disk points (law-aware)."""
        return evaluate_log_metric(self.mesh, self.log_h, self.e, z)

    def gamma_values(self) -> np.ndarray:
        """Fitted connection coefficient at the quotient vertices."""
        dz, _ = affine_scalar_derivatives(self.mesh, self.log_h, self.e)
        return dz


@dataclass(frozen=True)
class ContactFormSample:
    """Contact form components at one point of the unit circle bundle."""

    point: tuple
    components: tuple  # (theta_z, theta_w) in the (dz, dw) coframe
    kappa: float

    def fiber_pairing(self) -> float:
        """theta applied to the U(1) rotation generator (0, iw) + conj."""
        z, w = self.point
        tz, tw = self.components
        return float(np.real(tw * (1j * w) + np.conj(tw) * (-1j * np.conj(w))))


def contact_form(h, kappa: float, point) -> ContactFormSample:
    """Sample theta = -(i kappa/2)(Gamma dz + dw/w) on the level set.

    h provides gamma(z) and h(z) (a ModelMetric or a HermitianMetricField
    wrapper with closed-form methods); the point (z, w) must satisfy
    h(z)|w|^2 = 1 to 1e-10.
    """
    z, w = complex(point[0]), complex(point[1])
    _check_disk(z)
    level = float(h.h(z) * abs(w) ** 2)
    if abs(level - 1.0) > 1e-10:
        raise GeometryDomainError(
            f"point is off the unit bundle: h|w|^2 = {level!r}")
    gam = complex(h.gamma(z))
    tz = -0.5j * kappa * gam
    tw = -0.5j * kappa / w
    return ContactFormSample((z, w), (tz, tw), float(kappa))


def verify_curvature_identity(h, e: float, points, step: float | None = None,
                              fd: bool = False) -> float:
    """Max relative residual of d_z d_zbar log h = e rho/4 at given points.

    h may be a ModelMetric (analytic derivatives unless fd=True), a callable
    z -> log h(z) (finite differences), or a HermitianMetricField (finite
    differences through law-aware interpolation, default step the 2/3 power
    of the mesh size).
    """
    points = np.asarray(points, dtype=complex).ravel()
    _check_disk(points)
    target = e * rho(points) / 4.0

    if isinstance(h, ModelMetric) and not fd:
        got = np.asarray(h.dz_dzbar_log_h(points), dtype=float)
        return float(np.max(np.abs(got - target) / np.abs(target)))

    if isinstance(h, HermitianMetricField):
        logf = h.sample
        if step is None:
            a = h.mesh.vertices[h.mesh.triangles[:, 0]]
            b = h.mesh.vertices[h.mesh.triangles[:, 1]]
            step = float(np.median(np.abs(a - b))) ** (2.0 / 3.0)
    else:
        logf = h.log_h if isinstance(h, ModelMetric) else h
        if step is None:
            step = 1e-3

    worst = 0.0
    for z0 in points:
        got = _dz_dzbar_fd(logf, z0, step)
        t = float(e * rho(z0) / 4.0)
        worst = max(worst, abs(float(np.real(got)) - t) / abs(t))
    return worst


def _dz_dzbar_fd(logf, z0, step: float) -> float:
    """Mixed derivative d_z d_zbar = Laplacian/4 by five-point differences."""

    def second(fvals):
        return (-fvals[4] + 16 * fvals[3] - 30 * fvals[0]
                + 16 * fvals[1] - fvals[2]) / (12.0 * step ** 2)

    fx = [logf(z0), logf(z0 + step), logf(z0 + 2 * step),
          logf(z0 - step), logf(z0 - 2 * step)]
    fy = [fx[0], logf(z0 + 1j * step), logf(z0 + 2j * step),
          logf(z0 - 1j * step), logf(z0 - 2j * step)]
    return float(np.real(second(fx) + second(fy))) / 4.0


def contact_exactness_residual(h, kappa: float, points,
                               step: float | None = None,
                               fd: bool = False) -> float:
    """Max relative defect of d(theta) against the hyperbolic area form.

    The disk component of theta is -(i kappa/2) d_z log h and the fiber
    component is w-holomorphic, so the only surviving term of d(theta) is
    the area form with coefficient 2 kappa d_z d_zbar log h; the target
    coefficient is rho, independent of the bundle degree because kappa
    normalizes it away.
    """
    points = np.asarray(points, dtype=complex).ravel()
    _check_disk(points)
    if isinstance(h, ModelMetric) and not fd:
        got = 2.0 * kappa * np.asarray(h.dz_dzbar_log_h(points), dtype=float)
        return float(np.max(np.abs(got / rho(points) - 1.0)))
    if isinstance(h, HermitianMetricField):
        logf = h.sample
        if step is None:
            a = h.mesh.vertices[h.mesh.triangles[:, 0]]
            b = h.mesh.vertices[h.mesh.triangles[:, 1]]
            step = float(np.median(np.abs(a - b))) ** (2.0 / 3.0)
    else:
        logf = h.log_h if isinstance(h, ModelMetric) else h
        if step is None:
            step = 1e-3
    worst = 0.0
    for z0 in points:
        got = 2.0 * kappa * _dz_dzbar_fd(logf, z0, step)
        worst = max(worst, abs(got / float(rho(z0)) - 1.0))
    return worst


def model_group_action(A: MobiusElement, z, w, e):
    """Bundle action (z, w) -> (Az, phase * w / (cz+d)^e) for integer e."""
    if e != int(np.round(e)):
        raise UnsupportedError(
            f"(cz+d)^e is multivalued for noninteger e = {e}")
    e = int(np.round(e))
    z = complex(z)
    _check_disk(z)
    zp = A.apply(z)
    den = A.c * z + A.d
    wp = A.phase * complex(w) / den ** e
    return zp, wp


@dataclass(frozen=True)
class TWCurvatureResult:
    """Reduced pseudohermitian curvature data with its certificate."""

    curvature: SectionField
    torsion: float
    cartan: float
    residual: float


def reduced_tw_curvature(h: HermitianMetricField, mesh: SurfaceMesh,
                         tol: float = 1e-9) -> TWCurvatureResult:
    """Constant -1 curvature field, certified through the metric identity.

    Checks d_z d_zbar log h = e rho/4 vertexwise (in the normalized-chart
    form, second chart derivative = e); if it holds to tol the reduction
    gives scalar curvature -1 with vanishing torsion and Cartan tensor.
    """
    _, ddb = affine_scalar_derivatives(mesh, h.log_h, h.e)
    residual = float(np.max(np.abs(ddb - h.e) / h.e))
    if residual > tol:
        raise CertificateError(
            f"metric curvature identity fails: residual {residual:.3e} "
            f"> {tol:.1e}",
            stats={"residual": residual, "tolerance": tol})
    fieldvals = -np.ones(mesh.n_quotient)
    return TWCurvatureResult(
        curvature=SectionField(mesh, (0, 0), fieldvals.astype(complex)),
        torsion=0.0,
        cartan=0.0,
        residual=residual,
    )
