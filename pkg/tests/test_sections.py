"""Bump profiles, interior/seam test sections, manufactured Poisson data."""

import numpy as np
import pytest

from crlab.errors import ConstructionError, GeometryDomainError, UnsupportedError
from crlab.mesh import build_mesh, hyperbolic_area, quadrature
from crlab.mobius import fuchsian_group
from crlab.sections import (
    Bump,
    bump_field,
    bump_sum_derivatives,
    interior_bumps,
    orbit_scalar_derivatives,
    orbit_values,
    poisson_pair,
    polygon_inradius,
    seam_bump,
    seam_bump_field,
    seam_words,
)

G = fuchsian_group(2, 1)
MESH = build_mesh(G, 2)


def _wirtinger(fun, z, h=1e-5):
    fx = (fun(z + h) - fun(z - h)) / (2 * h)
    fy = (fun(z + 1j * h) - fun(z - 1j * h)) / (2 * h)
    return (fx - 1j * fy) / 2


class TestBump:
    @pytest.mark.parametrize("profile", ["exp", "quartic"])
    def test_dz_matches_fd(self, profile):
        b = Bump(0.1 + 0.05j, 0.4, 0.7 - 0.2j, profile)
        pts = np.array([0.1 + 0.05j, 0.2 - 0.1j, 0.3 + 0.2j, -0.05 + 0.15j])
        fd = _wirtinger(b.values, pts)
        assert np.max(np.abs(b.dz(pts) - fd)) < 1e-8

    @pytest.mark.parametrize("profile", ["exp", "quartic"])
    def test_dz_dzbar_matches_fd(self, profile):
        # for a function of |z - c|^2 the mixed derivative is laplacian / 4
        b = Bump(0.0j, 0.5, 1.0, profile)
        pts = np.array([0.1 + 0.05j, 0.2 - 0.1j, -0.15 + 0.2j])
        h = 1e-4
        lap = (b.values(pts + h) + b.values(pts - h) + b.values(pts + 1j * h)
               + b.values(pts - 1j * h) - 4.0 * b.values(pts)) / h ** 2
        assert np.max(np.abs(b.dz_dzbar(pts) - lap / 4.0)) < 1e-5

    def test_support(self):
        b = Bump(0.2, 0.3)
        assert b.values(np.array([0.2 + 0.31j]))[0] == 0.0
        assert b.dz(np.array([0.9]))[0] == 0.0
        assert b.values(np.array([0.2]))[0] != 0.0

    def test_validation(self):
        with pytest.raises(UnsupportedError):
            Bump(0.0, 0.3, profile="cubic")
        with pytest.raises(GeometryDomainError):
            Bump(0.0, -0.1)


class TestInteriorBumps:
    def test_inradius_below_corner_radius(self):
        inr = polygon_inradius(G)
        assert 0.0 < inr < abs(G.corners[0])

    def test_supports_stay_inside(self):
        rng = np.random.default_rng(3)
        for b in interior_bumps(G, 10, rng):
            assert abs(b.center) + b.radius < polygon_inradius(G)

    def test_field_values(self):
        rng = np.random.default_rng(5)
        bumps = interior_bumps(G, 2, rng, profile="quartic")
        fld = bump_field(MESH, bumps, (0, 0))
        z = MESH.vertices[MESH.rep_vertices]
        want = sum(b.values(z) for b in bumps)
        assert np.allclose(fld.values, want)
        v, dz, ddb = bump_sum_derivatives(bumps, z)
        assert np.allclose(v, want)


class TestPoissonPair:
    def test_source_is_balanced(self):
        rng = np.random.default_rng(5)
        u, f = poisson_pair(MESH, interior_bumps(G, 2, rng, profile="quartic"))
        mean = abs(complex(quadrature(f))) / hyperbolic_area(MESH)
        assert mean < 1e-14
        assert np.max(np.abs(u.values.imag)) == 0.0

    def test_rejects_complex_amplitudes(self):
        with pytest.raises(UnsupportedError):
            poisson_pair(MESH, [Bump(0.0, 0.3, 1j)])


class TestSeamBumps:
    def test_bump_dodges_corners(self):
        b = seam_bump(G, side=0)
        c = G.corners
        assert abs(b.center - c[0]) > b.radius
        assert abs(b.center - c[1]) > b.radius

    @pytest.mark.parametrize("weight", [(0, 0), (1, 0), (1, -1)])
    def test_field_is_automorphic(self, weight):
        b = seam_bump(G, side=0, profile="quartic")
        fld = seam_bump_field(MESH, b, weight)
        z = MESH.vertices[MESH.rep_vertices]
        want = orbit_values(b, seam_words(G, 0), weight, z)
        assert np.allclose(fld.values, want)

    def test_oversized_support_rejected(self):
        c = G.corners
        mid = seam_bump(G, 0).center
        gap = abs(mid - c[0])
        fat = Bump(mid, 3.0 * gap, 1.0, "quartic")
        with pytest.raises(ConstructionError):
            seam_bump_field(MESH, fat, (0, 0))

    def test_orbit_scalar_derivatives_match_fd(self):
        b = seam_bump(G, side=1, profile="exp")
        words = seam_words(G, 1)
        pts = MESH.vertices[MESH.rep_vertices][:8]
        v, dz, ddb = orbit_scalar_derivatives(b, words, pts)
        assert np.allclose(v, orbit_values(b, words, (0, 0), pts))
        fd = _wirtinger(lambda z: orbit_values(b, words, (0, 0), z), pts)
        assert np.max(np.abs(dz - fd)) < 1e-7
