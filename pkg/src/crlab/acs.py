"""Pointwise algebra of circle-invariant almost complex structures.

Structures on the 4-dimensional total space that keep the fiber directions
standard are pinned down by four coefficient functions (f, g, h, ell) of the
base point.  Everything here is pointwise linear algebra on the 4x4 real
matrix acting on (Re z, Im z, Re w, Im w): the Cayley-type parametrization
of such structures by anti-linear deformation tensors, its inverse, the
algebraic compatibility residuals, and a finite-difference integrability
check.  The w-linearity of the fiber components is factored out, so records
and deformation tensors are plain complex quadruples and pairs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    RecordValidationError,
    DegenerateInputError,
    ConstructionError,
)

_TOL = 1e-12


@dataclass(frozen=True)
class AlmostComplexRecord:
    """Coefficients of an invariant almost complex structure.

    On a vector a d/dz + b d/dw (complex components a, b at a point with
    fiber coordinate w) the structure acts as

        a -> f a + conj(g) conj(a)
        b -> h w a + conj(ell) w conj(a) + i b

    so (f, g, h, ell) = (i, 0, 0, 0) is the reference structure.
    """

    f: complex
    g: complex
    h: complex
    ell: complex


@dataclass(frozen=True)
class DeformationTensorE:
    """Anti-linear deformation: a -> conj(E11bar a), b -> conj(E1star a) w.

    Anticommutes with the reference structure identically; E1star is stored
    with the fiber linearity factored out.
    """

    E11bar: complex
    E1star: complex


STANDARD = AlmostComplexRecord(1j, 0.0 + 0j, 0.0 + 0j, 0.0 + 0j)
ZERO_DEFORMATION = DeformationTensorE(0.0 + 0j, 0.0 + 0j)


def _real_block(a: complex, b: complex) -> np.ndarray:
    """2x2 real matrix of x -> a x + b conj(x) on (Re x, Im x)."""
    return np.array([[(a + b).real, -(a - b).imag],
                     [(a + b).imag, (a - b).real]])


def _complex_pair(block: np.ndarray):
    """Inverse of _real_block: (a, b) from a 2x2 real matrix."""
    p, q = block[0]
    r, s = block[1]
    a = complex(p + s, r - q) / 2.0
    b = complex(p - s, r + q) / 2.0
    return a, b


def _assemble(A, B) -> np.ndarray:
    """4x4 real matrix of v -> A v + B conj(v) on stacked (a, b)."""
    M = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            M[2 * i:2 * i + 2, 2 * j:2 * j + 2] = _real_block(A[i][j], B[i][j])
    return M


def _disassemble(M: np.ndarray):
    A = np.zeros((2, 2), dtype=complex)
    B = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            a, b = _complex_pair(M[2 * i:2 * i + 2, 2 * j:2 * j + 2])
            A[i, j] = a
            B[i, j] = b
    return A, B


def record_matrix(rec: AlmostComplexRecord, w: complex = 1.0 + 0j) -> np.ndarray:
    """Real 4x4 matrix of the structure at fiber coordinate w."""
    A = [[rec.f, 0.0], [rec.h * w, 1j]]
    B = [[np.conj(rec.g), 0.0], [np.conj(rec.ell) * w, 0.0]]
    return _assemble(A, B)


def record_from_matrix(M: np.ndarray, w: complex = 1.0 + 0j,
                       tol: float = _TOL) -> AlmostComplexRecord:
    """Coefficients back out of a real 4x4, checking the invariant shape."""
    A, B = _disassemble(M)
    stray = max(abs(A[0, 1]), abs(B[0, 1]), abs(A[1, 1] - 1j), abs(B[1, 1]))
    if stray > tol:
        raise ConstructionError(
            f"matrix is not fiber-standard: stray entry {stray:.3e}")
    return AlmostComplexRecord(complex(A[0, 0]), complex(np.conj(B[0, 0])),
                               complex(A[1, 0] / w), complex(np.conj(B[1, 0] / w)))


def deformation_matrix(E: DeformationTensorE, w: complex = 1.0 + 0j) -> np.ndarray:
    A = [[0.0, 0.0], [0.0, 0.0]]
    B = [[np.conj(E.E11bar), 0.0], [np.conj(E.E1star) * w, 0.0]]
    return _assemble(A, B)


def deformation_from_matrix(M: np.ndarray, w: complex = 1.0 + 0j,
                            tol: float = _TOL) -> DeformationTensorE:
    A, B = _disassemble(M)
    stray = max(np.abs(A).max(), abs(B[0, 1]), abs(B[1, 1]))
    if stray > tol:
        raise ConstructionError(
            f"matrix is not an anti-linear deformation: stray entry {stray:.3e}")
    return DeformationTensorE(complex(np.conj(B[0, 0])),
                              complex(np.conj(B[1, 0] / w)))


def operator_norm(E: DeformationTensorE) -> float:
    """Spectral norm of the real matrix at w = 1."""
    return float(np.linalg.norm(deformation_matrix(E), 2))


def record_residuals(rec: AlmostComplexRecord) -> dict:
    """Residuals of the four algebraic compatibility constraints.

    A valid structure squares to minus the identity; on the coefficient
    level that is f^2 + |g|^2 = -1 together with g (f + conj f) = 0, and the
    fiber rows couple through h (f + i) + g conj(ell) = 0 and
    ell (f - i) + g conj(h) = 0.
    """
    f, g, h, ell = rec.f, rec.g, rec.h, rec.ell
    return {
        "square": abs(f * f + abs(g) ** 2 + 1.0),
        "mixed": abs(g * (f + np.conj(f))),
        "fiber_h": abs(h * (f + 1j) + g * np.conj(ell)),
        "fiber_ell": abs(ell * (f - 1j) + g * np.conj(h)),
    }


def validate_record(rec: AlmostComplexRecord, tol: float = _TOL) -> dict:
    """Raise RecordValidationError unless all constraints hold.

    Also checks the reconstructed matrix: square -identity to tol and
    determinant +1 to 1e-10 (orientation).
    """
    vals = [rec.f, rec.g, rec.h, rec.ell]
    if not all(np.isfinite(v) for v in vals):
        raise RecordValidationError("record has non-finite entries")
    res = record_residuals(rec)
    bad = {k: v for k, v in res.items() if v > tol}
    if bad:
        raise RecordValidationError(f"compatibility residuals too large: {bad}")
    M = record_matrix(rec)
    sq = np.abs(M @ M + np.eye(4)).max()
    if sq > tol:
        raise RecordValidationError(f"matrix square defect {sq:.3e}")
    det = np.linalg.det(M)
    if abs(det - 1.0) > 1e-10:
        raise RecordValidationError(f"determinant {det:.12f} != 1")
    res["square_matrix"] = sq
    res["det"] = abs(det - 1.0)
    return res


def validate_deformation(E: DeformationTensorE, tol: float = 1e-13) -> float:
    """Anticommutation defect of the reconstructed matrix with the reference."""
    if not (np.isfinite(E.E11bar) and np.isfinite(E.E1star)):
        raise RecordValidationError("deformation has non-finite entries")
    Me = deformation_matrix(E)
    J0 = record_matrix(STANDARD)
    defect = float(np.abs(Me @ J0 + J0 @ Me).max())
    if defect > tol:
        raise RecordValidationError(f"anticommutation defect {defect:.3e}")
    return defect


def phi_map(E: DeformationTensorE, validate: bool = True) -> AlmostComplexRecord:
    """Structure parametrized by E: (I - E J0/2) J0 (I - E J0/2)^(-1)."""
    validate_deformation(E)
    if operator_norm(E) >= 2.0:
        raise DegenerateInputError(
            f"deformation norm {operator_norm(E):.3f} >= 2")
    J0 = record_matrix(STANDARD)
    C = np.eye(4) - 0.5 * deformation_matrix(E) @ J0
    J = C @ J0 @ np.linalg.solve(C.T, np.eye(4)).T
    rec = record_from_matrix(J)
    if validate:
        validate_record(rec)
    return rec


def phi_inverse(rec: AlmostComplexRecord) -> DeformationTensorE:
    """Deformation recovering rec: 2 (J - J0)(J + J0)^(-1) J0."""
    J = record_matrix(rec)
    J0 = record_matrix(STANDARD)
    S = J + J0
    if abs(np.linalg.det(S)) < 1e-14:
        raise DegenerateInputError("structure is opposite the reference")
    E = 2.0 * (J - J0) @ np.linalg.inv(S) @ J0
    return deformation_from_matrix(E)


# ---------------------------------------------------------------------------
# Finite-difference integrability residual
# ---------------------------------------------------------------------------


def _matrix_at(field, x: np.ndarray) -> np.ndarray:
    z = complex(x[0], x[1])
    w = complex(x[2], x[3])
    return record_matrix(field(z, w), w)


def nijenhuis_fd(field, point, pair=(0, 2), step: float = 1e-3) -> np.ndarray:
    """Torsion residual N(e_i, e_j) by central differences.

    `field` maps (z, w) to an AlmostComplexRecord; invariant structures
    ignore w.  `point` is the (z, w) base point and `pair` picks two
    coordinate directions out of (Re z, Im z, Re w, Im w).  Returns the
    4-component real residual of

        N(X, Y) = [JX, JY] - [X, Y] - J [JX, Y] - J [X, JY]

    which vanishes identically for integrable structures.
    """
    if step < 1e-10:
        warnings.warn("step below 1e-10: differences dominated by roundoff")
    i, j = pair
    z, w = point
    x0 = np.array([z.real, z.imag, w.real, w.imag])
    J = _matrix_at(field, x0)
    dJ = np.zeros((4, 4, 4))
    for m in range(4):
        xp = x0.copy()
        xm = x0.copy()
        xp[m] += step
        xm[m] -= step
        dJ[m] = (_matrix_at(field, xp) - _matrix_at(field, xm)) / (2.0 * step)
    # coordinate fields commute, so the bare [X, Y] term drops out
    n = (np.einsum("m,mk->k", J[:, i], dJ[:, :, j])
         - np.einsum("m,mk->k", J[:, j], dJ[:, :, i])
         + J @ dJ[j][:, i] - J @ dJ[i][:, j])
    return n
