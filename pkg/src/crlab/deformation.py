"""Discrete gauge complex on the circle bundle: P, its adjoint, kernels.

Infinitesimal bundle automorphisms are pairs (v1, v) of a vector-field
component and a global function; deformations of the invariant complex
structure are pairs (F11bar, F1) of weighted sections.  This module
assembles the first-order operator P mapping automorphisms to deformations,
the displayed adjoint P*, the inner products both spaces carry, the
least-squares orthogonal splitting, and spectral kernel counts with
gap certificates.

Storage convention: operators act on stacked complex vectors over quotient
vertices, x = [v1; v] for automorphism pairs and y = [conj(F11bar);
conj(F1)] for deformation pairs.  The conjugation makes every block
complex-linear; public types hold the unconjugated fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (
    ConstructionError,
    CertificateError,
    InconclusiveSpectrumError,
    WeightError,
)
from .mesh import SurfaceMesh, SectionField, rho, dz_log_rho
from .fit import derivative_matrices, connection_dbar

# Fit orders joined in the certification pencil.  Quadratic stencils leave a
# visible truncation floor under the genuine modes at the mesh sizes we run,
# which caps the spectral gap; cubic and quartic stencils both resolve them.
_KERNEL_ORDERS = (3, 4)


# ---------------------------------------------------------------------------
# Connection data
# ---------------------------------------------------------------------------


def connection_model(mesh: SurfaceMesh, e: float) -> np.ndarray:
    """Closed-form connection coefficient e zbar/(1-|z|^2) of the model."""
    z = mesh.vertices[mesh.rep_vertices]
    return e * np.conj(z) / (1.0 - np.abs(z) ** 2)


def mu_constant(mesh: SurfaceMesh, gamma_values, e: float,
                tol: float = 1e-3, order: int = 3):
    """Certified constant -g^{1 1bar} d_z conj(Gamma) of a connection.

    Computes the vertexwise value from chart fits of the connection field
    and asserts near-constancy: std/|mean| must stay below tol (the
    certificate that makes the curvature-proportional-to-metric assumption
    checkable rather than assumed).  Returns (mu, stats).
    """
    dbar = connection_dbar(mesh, np.asarray(gamma_values, complex), e, order=order)
    mu_vertex = -np.conj(dbar) / 4.0
    mean = complex(mu_vertex.mean())
    std = float(np.sqrt(np.mean(np.abs(mu_vertex - mean) ** 2)))
    stats = {"mean_real": mean.real, "mean_imag": mean.imag, "std": std,
             "rel_spread": std / max(abs(mean), 1e-300)}
    if stats["rel_spread"] > tol:
        raise CertificateError(
            f"curvature/metric ratio is not constant: rel spread "
            f"{stats['rel_spread']:.3e} > {tol:.1e}", stats=stats)
    return mean.real, stats


@dataclass(frozen=True)
class ConnectionField:
    """Connection coefficient samples with their certified curvature constant.

    gamma holds d_z log h at the quotient vertices in disk coordinates; e
    fixes the deck behavior (degree over Euler number); mu is the certified
    value of -g^{1 1bar} d_z conj(Gamma).
    """

    mesh: SurfaceMesh
    gamma: np.ndarray
    e: float
    mu: float

    @classmethod
    def model(cls, mesh: SurfaceMesh, e: float) -> "ConnectionField":
        # d_z conj(Gamma) = e/(1-|z|^2)^2 = e rho/4 pointwise, no fit needed
        return cls(mesh, connection_model(mesh, e), float(e), -float(e) / 4.0)

    @classmethod
    def from_metric(cls, metric) -> "ConnectionField":
        gamma = metric.gamma_values()
        mu, _ = mu_constant(metric.mesh, gamma, metric.e)
        return cls(metric.mesh, gamma, float(metric.e), mu)


# ---------------------------------------------------------------------------
# Field pairs
# ---------------------------------------------------------------------------


def _expect_weight(field: SectionField, weight, name: str):
    if field.weight != weight:
        raise WeightError(f"{name} must have weight {weight}, got {field.weight}")


@dataclass(frozen=True)
class DeformationPair:
    """Infinitesimal automorphism data (v1, v): weights (-1,0) and (0,0)."""

    v1: SectionField
    v: SectionField

    def __post_init__(self):
        _expect_weight(self.v1, (-1, 0), "v1")
        _expect_weight(self.v, (0, 0), "v")
        if self.v1.mesh is not self.v.mesh:
            raise ConstructionError("pair components live on different meshes")

    @property
    def mesh(self):
        return self.v1.mesh


@dataclass(frozen=True)
class CotangentPair:
    """Deformation data (F11bar, F1): weights (1,-1) and (1,0)."""

    F11bar: SectionField
    F1: SectionField

    def __post_init__(self):
        _expect_weight(self.F11bar, (1, -1), "F11bar")
        _expect_weight(self.F1, (1, 0), "F1")
        if self.F11bar.mesh is not self.F1.mesh:
            raise ConstructionError("pair components live on different meshes")

    @property
    def mesh(self):
        return self.F11bar.mesh


def pair_from_vstar(mesh: SurfaceMesh, v1: SectionField, vstar_values,
                    conn: ConnectionField) -> DeformationPair:
    """Assemble (v1, v) with the global function v = v* + v1 Gamma."""
    _expect_weight(v1, (-1, 0), "v1")
    v = np.asarray(vstar_values, complex) + v1.values * conn.gamma
    return DeformationPair(v1, SectionField(mesh, (0, 0), v))


def vstar_of(pair: DeformationPair, conn: ConnectionField) -> np.ndarray:
    return pair.v.values - pair.v1.values * conn.gamma


def gauge_tensor(E11bar: SectionField, E1star_values,
                 conn: ConnectionField) -> CotangentPair:
    """Assemble (F11bar, F1) with the gauged F1 = E1* + F11bar conj(Gamma).

    F1 built this way obeys the pure tensor transport law even though the
    E1* values alone do not.
    """
    _expect_weight(E11bar, (1, -1), "E11bar")
    mesh = E11bar.mesh
    f1 = np.asarray(E1star_values, complex) + E11bar.values * np.conj(conn.gamma)
    return CotangentPair(E11bar, SectionField(mesh, (1, 0), f1))


def _vec_pair(V: DeformationPair) -> np.ndarray:
    return np.concatenate([V.v1.values, V.v.values])


def _unvec_pair(mesh: SurfaceMesh, x: np.ndarray) -> DeformationPair:
    n = mesh.n_quotient
    return DeformationPair(SectionField(mesh, (-1, 0), x[:n]),
                           SectionField(mesh, (0, 0), x[n:]))


def _vec_cot(F: CotangentPair) -> np.ndarray:
    return np.concatenate([np.conj(F.F11bar.values), np.conj(F.F1.values)])


def _unvec_cot(mesh: SurfaceMesh, y: np.ndarray) -> CotangentPair:
    n = mesh.n_quotient
    return CotangentPair(SectionField(mesh, (1, -1), np.conj(y[:n])),
                         SectionField(mesh, (1, 0), np.conj(y[n:])))


# ---------------------------------------------------------------------------
# Operator assembly
# ---------------------------------------------------------------------------


def _p_matrix(mesh: SurfaceMesh, mu: float, order: int) -> sp.csr_matrix:
    zq = mesh.vertices[mesh.rep_vertices]
    rq = rho(zq)
    _, db_m10 = derivative_matrices(mesh, (-1, 0), order=order)
    _, db_00 = derivative_matrices(mesh, (0, 0), order=order)
    return sp.bmat([[2j * db_m10, None],
                    [2j * mu * sp.diags(rq), 2j * db_00]], format="csr")


def _pstar_matrix(mesh: SurfaceMesh, mu: float, order: int) -> sp.csr_matrix:
    zq = mesh.vertices[mesh.rep_vertices]
    rq = rho(zq)
    dz_m11, _ = derivative_matrices(mesh, (-1, 1), order=order)
    dz_01, _ = derivative_matrices(mesh, (0, 1), order=order)
    inv = sp.diags(1.0 / rq)
    cov = dz_m11 + sp.diags(dz_log_rho(zq))
    return sp.bmat([[2j * inv @ cov, -2j * mu * inv],
                    [None, 2j * inv @ dz_01]], format="csr")


def _gram_E(mesh: SurfaceMesh) -> sp.csr_matrix:
    return sp.block_diag([sp.csr_matrix(mesh.section_gram((-1, 1))),
                          sp.csr_matrix(mesh.section_gram((0, 1)))],
                         format="csr")


def _gram_V(mesh: SurfaceMesh) -> sp.csr_matrix:
    return sp.block_diag([sp.csr_matrix(mesh.section_gram((-1, 0))),
                          sp.csr_matrix(mesh.section_gram((0, 0)))],
                         format="csr")


class DeformationOperators:
    """Assembled operators for one mesh and connection.

    P maps stacked automorphism pairs to stacked (conjugated) deformation
    pairs; Pstar is the displayed adjoint with its metric factors.  M_E and
    M_V are the gram matrices of the two inner products.  The fit order is
    the canonical one used for applying operators; kernel certification
    assembles its own multi-order pencils.
    """

    def __init__(self, mesh: SurfaceMesh, conn: ConnectionField, order: int = 3):
        if conn.mesh is not mesh:
            raise ConstructionError("connection assembled on a different mesh")
        self.mesh = mesh
        self.conn = conn
        self.order = int(order)
        self.P = _p_matrix(mesh, conn.mu, order)
        self.Pstar = _pstar_matrix(mesh, conn.mu, order)
        self.M_E = _gram_E(mesh)
        self.M_V = _gram_V(mesh)

    def _check(self, field_pair):
        if field_pair.mesh is not self.mesh:
            raise ConstructionError("field lives on a different mesh")


def apply_P(ops: DeformationOperators, V: DeformationPair) -> CotangentPair:
    ops._check(V)
    return _unvec_cot(ops.mesh, ops.P @ _vec_pair(V))


def apply_P_star(ops: DeformationOperators, F: CotangentPair) -> DeformationPair:
    ops._check(F)
    return _unvec_pair(ops.mesh, ops.Pstar @ _vec_cot(F))


def inner_product_E(ops: DeformationOperators, E: CotangentPair,
                    F: CotangentPair) -> complex:
    """Hermitian pairing of deformations, conjugate-linear in F."""
    ops._check(E)
    ops._check(F)
    return complex(_vec_cot(F).conj() @ (ops.M_E @ _vec_cot(E)))


def inner_product_V(ops: DeformationOperators, V: DeformationPair,
                    U: DeformationPair) -> float:
    """Real pairing of automorphism pairs (hermitian part plus conjugate)."""
    ops._check(V)
    ops._check(U)
    h = complex(_vec_pair(U).conj() @ (ops.M_V @ _vec_pair(V)))
    return 2.0 * h.real


def norm_E(ops: DeformationOperators, E: CotangentPair) -> float:
    return float(np.sqrt(max(inner_product_E(ops, E, E).real, 0.0)))


def norm_V(ops: DeformationOperators, V: DeformationPair) -> float:
    return float(np.sqrt(max(inner_product_V(ops, V, V), 0.0)))


def adjointness_defect(ops: DeformationOperators, V: DeformationPair,
                       F: CotangentPair) -> float:
    """|<P V, F>_E - <V, P* F>_V| / (|V| |F|), the discretization defect.

    The V product carries the "+ conjugate", so the matching pairing here
    is twice the real part of the hermitian one.
    """
    lhs = 2.0 * inner_product_E(ops, apply_P(ops, V), F).real
    rhs = inner_product_V(ops, V, apply_P_star(ops, F))
    den = norm_V(ops, V) * norm_E(ops, F)
    if den == 0.0:
        return 0.0
    return abs(lhs - rhs) / den


def assemble_laplacian_Delta(ops: DeformationOperators):
    """(N, M_V) with N = P^H M_E P, the normal operator of the gauge map.

    N is hermitian positive semidefinite by construction, so it is exactly
    self-adjoint in the M_V inner product after M_V^{-1} N; its kernel is
    the kernel of P.  The displayed second-order operator differs from this
    one by the adjointness defect of the derivative fits, which vanishes
    under refinement.
    """
    N = (ops.P.getH() @ ops.M_E @ ops.P).tocsr()
    return N, ops.M_V


# ---------------------------------------------------------------------------
# Spectral kernel counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumCertificate:
    """Sorted small singular values with the gap that justifies a count."""

    values: np.ndarray
    count_below: int
    threshold: float
    gap_ratio: float

    def summary(self) -> dict:
        return {"count_below": int(self.count_below),
                "gap_ratio": float(self.gap_ratio),
                "threshold": float(self.threshold)}


def _gap_count(sigmas: np.ndarray, ratio_required: float):
    s = np.asarray(sigmas, dtype=float)
    if len(s) < 2:
        raise InconclusiveSpectrumError("spectrum window too small", spectrum=s)
    ratios = s[1:] / np.maximum(s[:-1], 1e-300)
    k = int(np.argmax(ratios))
    gap = float(ratios[k])
    if gap < ratio_required:
        raise InconclusiveSpectrumError(
            f"largest spectral gap ratio {gap:.1f} below required "
            f"{ratio_required:.0f}; kernel count would be a guess",
            spectrum=s, gap_ratio=gap)
    threshold = float(np.sqrt(max(s[k], 1e-300) * s[k + 1]))
    return k + 1, threshold, gap


def kernel_dimension(A, B, n_small: int, ratio_required: float = 100.0,
                     complex_rep: bool = True):
    """Real kernel dimension of a PSD pencil with a spectral-gap certificate.

    Solves the generalized eigenproblem A x = s^2 B x for the n_small
    smallest values.  With complex_rep the matrices act complex-linearly
    and every singular value of the underlying real operator appears twice,
    so the certificate lists duplicated values and the returned count is a
    real dimension.  A gap ratio below ratio_required raises
    InconclusiveSpectrumError with the spectrum attached.
    """
    Ad = A.toarray() if sp.issparse(A) else np.asarray(A)
    Bd = B.toarray() if sp.issparse(B) else np.asarray(B)
    k = (n_small + 1) // 2 if complex_rep else n_small
    k = min(max(k + 1, 4), Ad.shape[0])
    w = sla.eigh(Ad, Bd, eigvals_only=True, subset_by_index=[0, k - 1])
    sig = np.sqrt(np.clip(w, 0.0, None))
    if complex_rep:
        sig = np.repeat(sig, 2)[:max(n_small, 4)]
    count, threshold, gap = _gap_count(sig, ratio_required)
    return count, SpectrumCertificate(sig, count, threshold, gap)


def _joint_normal(mats, gram_out):
    A = None
    for D in mats:
        term = (D.getH() @ gram_out @ D).tocsr()
        A = term if A is None else A + term
    return A


def kernel_dimension_P_star(mesh: SurfaceMesh, conn: ConnectionField,
                            ratio_required: float = 100.0,
                            orders=_KERNEL_ORDERS):
    """Certified real dimension of the discrete kernel of the adjoint map.

    Builds the displayed adjoint at each fit order and counts the joint
    near-kernel: single-stencil matrices possess exact mesh-scale kernel
    artifacts, while genuine modes are annihilated by every consistent
    stencil, so the sum of normal operators separates them cleanly.
    """
    g = mesh.genus
    window = 2 * (8 * g - 6)
    mats = [_pstar_matrix(mesh, conn.mu, o) for o in orders]
    A = _joint_normal(mats, _gram_V(mesh))
    return kernel_dimension(A, _gram_E(mesh), window, ratio_required)


def kernel_dimension_Delta(mesh: SurfaceMesh, conn: ConnectionField,
                           ratio_required: float = 100.0,
                           orders=_KERNEL_ORDERS):
    """Certified real dimension of the gauge kernel (kernel of P)."""
    mats = [_p_matrix(mesh, conn.mu, o) for o in orders]
    A = _joint_normal(mats, _gram_E(mesh))
    return kernel_dimension(A, _gram_V(mesh), 8, ratio_required)


def holomorphic_section_dim(mesh: SurfaceMesh, q: int,
                            ratio_required: float = 100.0,
                            orders=_KERNEL_ORDERS):
    """Certified real dimension of the dbar kernel on weight-(q,0) sections."""
    if q not in (1, 2):
        raise WeightError(f"holomorphic section count supports q in (1, 2), got {q}")
    g = mesh.genus
    expected = 2 * g if q == 1 else 6 * g - 6
    window = 2 * expected
    mats = [derivative_matrices(mesh, (q, 0), order=o)[1] for o in orders]
    gram_out = sp.csr_matrix(mesh.section_gram((q, 1)))
    A = _joint_normal(mats, gram_out)
    B = sp.csr_matrix(mesh.section_gram((q, 0)))
    return kernel_dimension(A, B, window, ratio_required)


# ---------------------------------------------------------------------------
# Orthogonal splitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitResult:
    """E = E0 + P(V) with E0 orthogonal to the gauge directions.

    pstar_exact_rel is the discrete-adjoint residual of E0 (zero up to
    solver precision by the normal equations); pstar_formula_rel applies
    the displayed adjoint instead and carries its O(h) discretization
    defect; ortho_rel is the relative pairing of the two parts.
    """

    E0: CotangentPair
    V: DeformationPair
    pstar_exact_rel: float
    pstar_formula_rel: float
    ortho_rel: float


def split_deformation(ops: DeformationOperators, E: CotangentPair) -> SplitResult:
    """Least-squares orthogonal splitting of a deformation.

    Solves the normal equations P^H M_E P V = P^H M_E E (pseudo-inverse on
    the singular gauge kernel) and returns E0 = E - P(V).  The splitting is
    a projection: feeding E0 back returns (E0, 0).
    """
    ops._check(E)
    y = _vec_cot(E)
    N = (ops.P.getH() @ ops.M_E @ ops.P).toarray()
    b = ops.P.getH() @ (ops.M_E @ y)
    # hermitian PSD least-squares solve; kernel directions get no component
    x, *_ = np.linalg.lstsq(N, b, rcond=1e-12)
    pv = ops.P @ x
    y0 = y - pv
    E0 = _unvec_cot(ops.mesh, y0)
    V = _unvec_pair(ops.mesh, x)
    nE = norm_E(ops, E)
    nE0 = norm_E(ops, E0)
    PV = _unvec_cot(ops.mesh, pv)
    nPV = norm_E(ops, PV)
    # exact-adjoint residual M_V^{-1} P^H M_E E0, measured in the V norm
    r = ops.P.getH() @ (ops.M_E @ y0)
    s = sp.linalg.spsolve(ops.M_V.tocsc(), r)
    exact_norm = float(np.sqrt(max(2.0 * (np.conj(r) @ s).real, 0.0)))
    exact_rel = exact_norm / max(nE, 1e-300)
    formula = apply_P_star(ops, E0)
    formula_rel = norm_V(ops, formula) / max(nE, 1e-300)
    ortho = abs(inner_product_E(ops, E0, PV))
    ortho_rel = ortho / max(nE0 * nPV, 1e-300)
    return SplitResult(E0, V, exact_rel, formula_rel, ortho_rel)
