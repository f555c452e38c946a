"""Compactly supported bump sections with closed-form derivatives.

Manufactured data for the solvers: every field here is a sum of radial
bumps whose z and zbar derivatives are known in closed form, so solver
output can be checked against analytic references without a second
numerical differentiation pass.  Interior bumps vanish near the polygon
boundary and sidestep the pairing laws entirely; seam bumps are truncated
orbit sums centered on a side midpoint and satisfy the laws exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedError, GeometryDomainError, ConstructionError
from .mobius import FuchsianGroup, IDENTITY, side_pairing_table
from .mesh import (SurfaceMesh, SectionField, rho, hyperbolic_midpoint,
                   quadrature, hyperbolic_area)

_PROFILES = ("exp", "quartic")


@dataclass(frozen=True)
class Bump:
    """Radial bump a * psi(|z - c|^2 / r^2), supported on |z - c| < r.

    profile "exp" is exp(1 - 1/(1-t)), smooth with all derivatives vanishing
    at the rim; "quartic" is (1-t)^4, only C^3 at the rim but far tamer in
    the interior, which is what convergence studies want.
    """

    center: complex
    radius: float
    amplitude: complex = 1.0 + 0.0j
    profile: str = "exp"

    def __post_init__(self):
        if self.profile not in _PROFILES:
            raise UnsupportedError(f"unknown bump profile {self.profile!r}")
        if not self.radius > 0:
            raise GeometryDomainError("bump radius must be positive")

    def _t(self, z):
        z = np.asarray(z, dtype=complex)
        return np.abs(z - self.center) ** 2 / self.radius ** 2

    def values(self, z) -> np.ndarray:
        t = self._t(z)
        out = np.zeros(t.shape)
        ins = t < 1.0
        if self.profile == "exp":
            out[ins] = np.exp(1.0 - 1.0 / (1.0 - t[ins]))
        else:
            out[ins] = (1.0 - t[ins]) ** 4
        return self.amplitude * out

    def dz(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        t = self._t(z)
        tz = np.conj(z - self.center) / self.radius ** 2
        out = np.zeros(t.shape)
        ins = t < 1.0
        if self.profile == "exp":
            u = 1.0 / (1.0 - t[ins])
            out[ins] = -np.exp(1.0 - u) * u ** 2
        else:
            out[ins] = -4.0 * (1.0 - t[ins]) ** 3
        return self.amplitude * out * tz

    def dz_dzbar(self, z) -> np.ndarray:
        t = self._t(z)
        out = np.zeros(t.shape)
        ins = t < 1.0
        ti = t[ins]
        if self.profile == "exp":
            u = 1.0 / (1.0 - ti)
            out[ins] = np.exp(1.0 - u) * u ** 2 * (u ** 2 * ti - 2.0 * u * ti - 1.0)
        else:
            out[ins] = 12.0 * (1.0 - ti) ** 2 * ti - 4.0 * (1.0 - ti) ** 3
        return self.amplitude * out / self.radius ** 2


def polygon_inradius(G: FuchsianGroup) -> float:
    """Euclidean distance from the origin to the polygon boundary.

    The closest point of each geodesic side is its midpoint, so a bump with
    |center| + radius below this value is supported strictly inside the
    fundamental polygon.
    """
    c = G.corners
    mids = [hyperbolic_midpoint(c[k], c[(k + 1) % len(c)]) for k in range(len(c))]
    return float(min(abs(m) for m in mids))


def interior_bumps(G: FuchsianGroup, n: int, rng, profile: str = "exp",
                   complex_amplitudes: bool = False) -> list:
    """Random bumps whose supports stay inside the fundamental polygon."""
    inr = polygon_inradius(G)
    out = []
    for _ in range(n):
        # keep the radius a decent fraction of the polygon so coarse meshes
        # still resolve the profile
        radius = inr * rng.uniform(0.35, 0.6)
        rmax = inr - radius
        w = rng.uniform(-1.0, 1.0) + 1j * rng.uniform(-1.0, 1.0)
        while abs(w) > 1.0:
            w = rng.uniform(-1.0, 1.0) + 1j * rng.uniform(-1.0, 1.0)
        amp = rng.uniform(0.3, 1.0) * (-1.0) ** rng.integers(2)
        if complex_amplitudes:
            amp = amp * np.exp(2j * np.pi * rng.uniform())
        out.append(Bump(complex(0.9 * rmax * w), radius, amp, profile))
    return out


def bump_field(mesh: SurfaceMesh, bumps, weight) -> SectionField:
    """Section whose quotient values are the bump sum at the representatives.

    Callers must keep the supports away from the polygon boundary (see
    interior_bumps); nothing here checks the pairing laws.
    """
    z = mesh.vertices[mesh.rep_vertices]
    vals = np.zeros(len(z), dtype=complex)
    for b in bumps:
        vals += b.values(z)
    return SectionField(mesh, weight, vals)


def bump_sum_derivatives(bumps, z):
    """(values, d/dz, d2/dz dzbar) of a bump sum at arbitrary disk points."""
    z = np.asarray(z, dtype=complex)
    v = np.zeros(z.shape, dtype=complex)
    dz = np.zeros(z.shape, dtype=complex)
    ddb = np.zeros(z.shape, dtype=complex)
    for b in bumps:
        v += b.values(z)
        dz += b.dz(z)
        ddb += b.dz_dzbar(z)
    return v, dz, ddb


def poisson_pair(mesh: SurfaceMesh, bumps):
    """Manufactured (solution, source) pair for the scalar Poisson solver.

    With u the bump sum, the matching source is Sigma = (2/rho) d_z d_zbar u,
    which has zero mean against the volume form.  The vertex interpolant of
    Sigma does not integrate to zero exactly, so the returned source is
    re-centered by its own quadrature mean; the shift is plain quadrature
    error and decays at the rate of the composite rule.  Amplitudes must be
    real so u is a real scalar.
    """
    if any(abs(b.amplitude.imag) > 0 for b in bumps):
        raise UnsupportedError("poisson_pair needs real bump amplitudes")
    z = mesh.vertices[mesh.rep_vertices]
    u, _, ddb = bump_sum_derivatives(bumps, z)
    sigma = 2.0 * ddb.real / rho(z)
    f = SectionField(mesh, (0, 0), sigma.astype(complex))
    f.values -= complex(quadrature(f)).real / hyperbolic_area(mesh)
    return SectionField(mesh, (0, 0), u.real.astype(complex)), f


# ---------------------------------------------------------------------------
# Seam bumps: truncated orbit sums that cross one polygon side
# ---------------------------------------------------------------------------


def seam_words(G: FuchsianGroup, side: int):
    """Group words whose translates can reach a bump centered on `side`."""
    _, M = side_pairing_table(G)[side]
    return [IDENTITY, M, M.inverse()]


def side_midpoint(G: FuchsianGroup, side: int) -> complex:
    c = G.corners
    return hyperbolic_midpoint(c[side], c[(side + 1) % len(c)])


def seam_bump(G: FuchsianGroup, side: int = 0, scale: float = 0.35,
              amplitude=1.0, profile: str = "exp") -> Bump:
    """Bump centered on a side midpoint, small enough to dodge the corners.

    With the radius below the distance to the adjacent corners, the only
    group translates whose support meets the closed polygon are the identity
    and the pairing of that side, so the 3-word orbit sum below is exactly
    automorphic.
    """
    c = G.corners
    mid = side_midpoint(G, side)
    gap = min(abs(mid - c[side]), abs(mid - c[(side + 1) % len(c)]))
    return Bump(mid, scale * gap, amplitude, profile)


def orbit_values(bump: Bump, words, weight, z) -> np.ndarray:
    """Truncated orbit sum sum_g g'(z)^p conj(g'(z))^q bump(g z)."""
    p, q = int(weight[0]), int(weight[1])
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape, dtype=complex)
    for g in words:
        d = g.deriv(z)
        out += d ** p * np.conj(d) ** q * bump.values(g.apply(z))
    return out


def orbit_scalar_derivatives(bump: Bump, words, z):
    """(values, d/dz, d2/dz dzbar) of a weight-(0,0) orbit sum."""
    z = np.asarray(z, dtype=complex)
    v = np.zeros(z.shape, dtype=complex)
    dz = np.zeros(z.shape, dtype=complex)
    ddb = np.zeros(z.shape, dtype=complex)
    for g in words:
        gz = g.apply(z)
        d = g.deriv(z)
        v += bump.values(gz)
        dz += bump.dz(gz) * d
        ddb += bump.dz_dzbar(gz) * np.abs(d) ** 2
    return v, dz, ddb


def seam_bump_field(mesh: SurfaceMesh, bump: Bump, weight,
                    words=None, check: float = 1e-10) -> SectionField:
    """Automorphic section from a 3-word orbit sum, validated at the seams.

    Evaluates the orbit sum at every domain vertex and checks that the
    paired values satisfy the transport law before reducing to quotient
    values; a residual above `check` means the bump support is too large
    for the truncated word list.
    """
    if words is None:
        side = _side_of(mesh.group, bump.center)
        words = seam_words(mesh.group, side)
    dom = orbit_values(bump, words, weight, mesh.vertices)
    coeff = mesh.transport_coeffs(weight)
    worst = 0.0
    scale = max(np.max(np.abs(dom)), 1e-30)
    for v, (rep, _) in mesh.pairings.items():
        res = abs(dom[v] - coeff[v] * dom[rep]) / scale
        worst = max(worst, res)
    if worst > check:
        raise ConstructionError(
            f"orbit sum automorphy residual {worst:.3e}: bump support "
            "reaches translates outside the word list")
    return SectionField(mesh, weight, dom[mesh.rep_vertices])


def _side_of(G: FuchsianGroup, center: complex) -> int:
    mids = [side_midpoint(G, s) for s in range(G.n_sides)]
    return int(np.argmin([abs(center - m) for m in mids]))
