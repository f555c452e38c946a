"""Pointwise structure algebra: records, deformation tensors, Cayley maps."""

import numpy as np
import pytest

from crlab.acs import (
    AlmostComplexRecord,
    DeformationTensorE,
    STANDARD,
    ZERO_DEFORMATION,
    deformation_from_matrix,
    deformation_matrix,
    nijenhuis_fd,
    operator_norm,
    phi_inverse,
    phi_map,
    record_from_matrix,
    record_matrix,
    record_residuals,
    validate_deformation,
    validate_record,
)
from crlab.errors import (
    ConstructionError,
    DegenerateInputError,
    RecordValidationError,
)


def _stack(a, b):
    return np.array([a.real, a.imag, b.real, b.imag])


def _unstack(v):
    return complex(v[0], v[1]), complex(v[2], v[3])


class TestRecordMatrix:
    def test_standard_is_block_rotation(self):
        R = np.array([[0.0, -1.0], [1.0, 0.0]])
        M = record_matrix(STANDARD, 0.7 - 0.2j)
        assert np.allclose(M[:2, :2], R)
        assert np.allclose(M[2:, 2:], R)
        assert np.allclose(M[:2, 2:], 0.0)
        assert np.allclose(M[2:, :2], 0.0)

    @pytest.mark.parametrize("w", [1.0 + 0j, 0.3 - 1.2j, -0.9 + 0.1j])
    def test_standard_squares_to_minus_identity(self, w):
        M = record_matrix(STANDARD, w)
        assert np.allclose(M @ M, -np.eye(4), atol=1e-14)

    def test_matrix_matches_action_formula(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            f, g, h, ell = (complex(*rng.normal(size=2)) for _ in range(4))
            w = complex(*rng.normal(size=2))
            rec = AlmostComplexRecord(f, g, h, ell)
            a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
            out = record_matrix(rec, w) @ _stack(a, b)
            a2, b2 = _unstack(out)
            assert abs(a2 - (f * a + np.conj(g) * np.conj(a))) < 1e-12
            want_b = h * w * a + np.conj(ell) * w * np.conj(a) + 1j * b
            assert abs(b2 - want_b) < 1e-12

    def test_round_trip(self):
        rec = AlmostComplexRecord(0.9j, 0.1 - 0.2j, 0.3 + 0.05j, -0.07j)
        w = 0.4 + 0.6j
        back = record_from_matrix(record_matrix(rec, w), w)
        for name in ("f", "g", "h", "ell"):
            assert abs(getattr(back, name) - getattr(rec, name)) < 1e-13

    def test_stray_entries_rejected(self):
        M = record_matrix(STANDARD, 1.0)
        M[0, 2] = 0.01  # base output must not see fiber input
        with pytest.raises(ConstructionError):
            record_from_matrix(M, 1.0)


class TestDeformationTensor:
    def test_anticommutes_with_reference(self):
        E = DeformationTensorE(0.4 - 0.1j, 0.2 + 0.3j)
        assert validate_deformation(E) < 1e-13
        J0 = record_matrix(STANDARD, 0.8 + 0.1j)
        D = deformation_matrix(E, 0.8 + 0.1j)
        assert np.linalg.norm(J0 @ D + D @ J0) < 1e-13

    def test_matrix_round_trip(self):
        E = DeformationTensorE(-0.3 + 0.7j, 0.12 - 0.05j)
        w = 1.1 - 0.4j
        back = deformation_from_matrix(deformation_matrix(E, w), w)
        assert abs(back.E11bar - E.E11bar) < 1e-13
        assert abs(back.E1star - E.E1star) < 1e-13

    def test_operator_norm(self):
        assert operator_norm(ZERO_DEFORMATION) == 0.0
        # a pure base deformation acts with spectral norm |E11bar|
        assert abs(operator_norm(DeformationTensorE(0.5, 0.0)) - 0.5) < 1e-14
        assert operator_norm(DeformationTensorE(0.3, 0.4)) > 0.3


class TestPhiMaps:
    def test_zero_maps_to_standard(self):
        rec = phi_map(ZERO_DEFORMATION)
        assert rec == STANDARD or all(
            abs(getattr(rec, n) - getattr(STANDARD, n)) < 1e-15
            for n in ("f", "g", "h", "ell"))

    def test_round_trips_and_residuals(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            E = DeformationTensorE(complex(*rng.normal(scale=0.4, size=2)),
                                   complex(*rng.normal(scale=0.4, size=2)))
            if operator_norm(E) >= 1.9:
                continue
            rec = phi_map(E)
            res = validate_record(rec)
            for key in ("square", "mixed", "fiber_h", "fiber_ell"):
                assert res[key] < 1e-12
            back = phi_inverse(rec)
            assert abs(back.E11bar - E.E11bar) < 1e-12
            assert abs(back.E1star - E.E1star) < 1e-12

    def test_large_deformation_rejected(self):
        with pytest.raises(DegenerateInputError):
            phi_map(DeformationTensorE(2.5, 0.0))

    def test_opposite_structure_rejected(self):
        minus = AlmostComplexRecord(-1j, 0.0, 0.0, 0.0)
        with pytest.raises(DegenerateInputError):
            phi_inverse(minus)

    def test_validate_record_rejects_broken(self):
        with pytest.raises(RecordValidationError):
            validate_record(AlmostComplexRecord(1.1j, 0.0, 0.0, 0.0))
        res = record_residuals(AlmostComplexRecord(1.1j, 0.0, 0.0, 0.0))
        assert res["square"] > 0.1

    def test_validate_record_extras(self):
        # both extra entries are defects: |det - 1| and ||M^2 + I||
        res = validate_record(phi_map(DeformationTensorE(0.2, 0.1j)))
        assert res["det"] < 1e-10
        assert res["square_matrix"] < 1e-10


class TestNijenhuis:
    def test_constant_structure_torsion_free(self):
        rec = phi_map(DeformationTensorE(0.3 + 0.1j, 0.2 - 0.05j))
        n = nijenhuis_fd(lambda z, w: rec, (0.2 + 0.1j, 1.0 + 0j))
        assert np.abs(n).max() < 1e-12

    def test_invariant_field_residual_second_order(self):
        # coefficients varying over the base only: integrable, so the FD
        # value is pure truncation error and must shrink like step^2
        def field(z, w):
            return phi_map(DeformationTensorE(0.3 * np.conj(z), 0.2 * z + 0.1))

        pt = (0.3 - 0.2j, 0.8 + 0.3j)
        res = [np.abs(nijenhuis_fd(field, pt, pair=(0, 1), step=s)).max()
               for s in (8e-3, 4e-3, 2e-3)]
        assert res[2] < 1e-8
        assert 3.5 < res[0] / res[1] < 4.5
        assert 3.5 < res[1] / res[2] < 4.5

    def test_fiber_dependence_has_torsion(self):
        def field(z, w):
            return phi_map(DeformationTensorE(
                0.2 * np.conj(z) + 0.1 * np.real(w), 0.15 * z))

        n = nijenhuis_fd(field, (0.3 - 0.2j, 0.8 + 0.3j), pair=(0, 2))
        assert np.abs(n).max() > 1e-2

    def test_tiny_step_warns(self):
        rec = phi_map(DeformationTensorE(0.1, 0.0))
        with pytest.warns(UserWarning):
            nijenhuis_fd(lambda z, w: rec, (0.1 + 0j, 1.0 + 0j), step=1e-12)
