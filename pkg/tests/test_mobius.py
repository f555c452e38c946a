import cmath
import math

import numpy as np
import pytest

from crlab.errors import GeometryDomainError, UnsupportedError
from crlab.mobius import (MobiusElement, corner_words, fuchsian_group,
                          group_relation_residual, mobius_apply,
                          pair_isometry, point_to_zero, polygon_corners,
                          random_su11, representative_sides, rotation,
                          side_pairing_table)


def test_apply_matches_formula():
    M = MobiusElement(2.0, 1.0 + 0.5j, 1.0 - 0.5j, 2.0)
    z = 0.3 - 0.2j
    assert M.apply(z) == pytest.approx((M.a * z + M.b) / (M.c * z + M.d))
    assert mobius_apply(M, z) == pytest.approx(M.apply(z))


def test_compose_is_matrix_product():
    rng = np.random.default_rng(3)
    A = random_su11(rng)
    B = random_su11(rng)
    z = 0.4 + 0.1j
    assert (A @ B).apply(z) == pytest.approx(A.apply(B.apply(z)))
    assert np.allclose((A @ B).matrix, A.matrix @ B.matrix)


def test_inverse_round_trip():
    rng = np.random.default_rng(4)
    for _ in range(20):
        M = random_su11(rng, phase=True)
        z = 0.7 * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1))
        assert M.inverse().apply(M.apply(z)) == pytest.approx(z, abs=1e-12)
        assert (M @ M.inverse()).su11_defect() < 1e-12


def test_deriv_matches_finite_difference():
    rng = np.random.default_rng(5)
    M = random_su11(rng)
    z = 0.25 + 0.3j
    h = 1e-6
    fd = (M.apply(z + h) - M.apply(z - h)) / (2 * h)
    assert M.deriv(z) == pytest.approx(fd, rel=1e-8)


def test_su11_preserves_disk_metric_density():
    # |M'(z)| (1 - |z|^2) = 1 - |Mz|^2 for SU(1,1)
    rng = np.random.default_rng(6)
    for _ in range(20):
        M = random_su11(rng)
        z = 0.8 * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)) / math.sqrt(2)
        lhs = abs(M.deriv(z)) * (1 - abs(z) ** 2)
        assert lhs == pytest.approx(1 - abs(M.apply(z)) ** 2, rel=1e-12)


def test_rotation_and_point_to_zero():
    R = rotation(math.pi / 3)
    assert R.apply(0.5) == pytest.approx(0.5 * cmath.exp(1j * math.pi / 3))
    p = 0.3 - 0.4j
    assert point_to_zero(p).apply(p) == pytest.approx(0.0, abs=1e-15)
    assert point_to_zero(p).is_su11()
    with pytest.raises(GeometryDomainError):
        point_to_zero(1.2)


def test_pair_isometry_endpoints():
    corners = polygon_corners(2)
    M = pair_isometry(corners[0], corners[1], corners[3], corners[2])
    assert M.apply(corners[0]) == pytest.approx(corners[3], abs=1e-12)
    assert M.apply(corners[1]) == pytest.approx(corners[2], abs=1e-12)
    assert M.is_su11()


def test_polygon_corners_layout():
    for g in (2, 3):
        corners = polygon_corners(g)
        assert len(corners) == 4 * g
        r = np.abs(corners)
        assert np.allclose(r, r[0])
        assert 0 < r[0] < 1
    # genus 2: corner hyperbolic radius satisfies cosh r = cot^2(pi/8)
    r0 = abs(polygon_corners(2)[0])
    coshr = (1 + r0 ** 2) / (1 - r0 ** 2)
    assert coshr == pytest.approx(1.0 / math.tan(math.pi / 8) ** 2, rel=1e-12)


@pytest.mark.parametrize("genus,m", [(2, 1), (2, 3), (3, 2)])
def test_fuchsian_group_basics(genus, m):
    G = fuchsian_group(genus, m)
    assert G.n_sides == 4 * genus
    assert len(G.generators) == 2 * genus
    for M in G.generators:
        assert M.is_su11()
        assert M.is_hyperbolic()
        assert M.translation_length() > 0
    assert group_relation_residual(G) < 1e-10


def test_side_pairing_carries_sides():
    G = fuchsian_group(2, 1)
    corners = G.corners
    table = side_pairing_table(G)
    N = G.n_sides
    for s, (p, M) in enumerate(table):
        # side s endpoints go to side p endpoints, order reversed
        assert M.apply(corners[s]) == pytest.approx(corners[(p + 1) % N],
                                                    abs=1e-10)
        assert M.apply(corners[(s + 1) % N]) == pytest.approx(corners[p],
                                                              abs=1e-10)
    reps = representative_sides(G)
    assert sorted(reps + [table[s][0] for s in reps]) == list(range(N))


def test_corner_words_cover_orbit():
    G = fuchsian_group(2, 1)
    words = corner_words(G)
    corners = G.corners
    assert len(words) == 8
    for c, W in enumerate(words):
        assert W.apply(corners[0]) == pytest.approx(corners[c], abs=1e-9)


def test_serialization_round_trip():
    G = fuchsian_group(3, 2)
    G2 = type(G).from_dict(G.to_dict())
    assert G2.genus == 3 and G2.chern_m == 2
    for M, M2 in zip(G.generators, G2.generators):
        assert np.allclose(M.matrix, M2.matrix)
        assert M2.phase == pytest.approx(M.phase)


def test_invalid_parameters_rejected():
    with pytest.raises(UnsupportedError):
        fuchsian_group(1, 1)
    with pytest.raises(UnsupportedError):
        fuchsian_group(2, 0)
    with pytest.raises(UnsupportedError):
        polygon_corners(0)


def test_translation_length_requires_hyperbolic():
    with pytest.raises(GeometryDomainError):
        rotation(0.3).translation_length()
