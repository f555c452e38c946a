"""Triangulated fundamental domain of the surface group with side gluing.

The fundamental 4g-gon is fanned from the origin and refined by hyperbolic
midpoint subdivision, so every refinement level is a geodesic triangulation
whose boundary vertices match exactly across side pairings.  Fields live on
quotient (representative) vertices; a transport coefficient per domain
vertex reconstructs domain values for any automorphy weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    GeometryDomainError,
    UnsupportedError,
    WeightError,
    ConstructionError,
)
from .mobius import (
    MobiusElement,
    IDENTITY,
    FuchsianGroup,
    point_to_zero,
    side_pairing_table,
    representative_sides,
    corner_words,
)

# ---------------------------------------------------------------------------
# Hyperbolic metric density
# ---------------------------------------------------------------------------


def rho(z):
    """Poincare density 4/(1-|z|^2)^2 of the curvature -1 disk metric."""
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    if np.any(r2 >= 1.0):
        raise GeometryDomainError("point outside the open unit disk")
    out = 4.0 / (1.0 - r2) ** 2
    return out if out.ndim else float(out)


def dz_log_rho(z):
    """d/dz of log rho, equal to 2 conj(z)/(1-|z|^2)."""
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    if np.any(r2 >= 1.0):
        raise GeometryDomainError("point outside the open unit disk")
    out = 2.0 * np.conj(z) / (1.0 - r2)
    return out if out.ndim else complex(out)


class ConformalFactor:
    """Vertexwise samples of the hyperbolic density on a mesh."""

    def __init__(self, mesh: "SurfaceMesh"):
        self.mesh = mesh
        self.values = rho(mesh.vertices[mesh.rep_vertices])

    def at(self, z):
        return rho(z)


def hyperbolic_midpoint(a: complex, b: complex) -> complex:
    """Midpoint of the geodesic segment from a to b."""
    M = point_to_zero(a)
    w = M.apply(b)
    r = abs(w)
    if r == 0.0:
        return complex(a)
    # half the hyperbolic distance, back to a Euclidean radius
    half = math.tanh(0.5 * math.atanh(r))
    return M.inverse().apply(half * (w / r))


def _hyp_mid(a, b):
    """Vectorized geodesic midpoint for arrays of disk points."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    w = (b - a) / (1.0 - np.conj(a) * b)
    r = np.abs(w)
    half = np.tanh(0.5 * np.arctanh(r))
    u = np.where(r > 0, w / np.where(r > 0, r, 1.0), 0.0) * half
    return (u + a) / (1.0 + np.conj(a) * u)


# ---------------------------------------------------------------------------
# Mesh construction
# ---------------------------------------------------------------------------


class SurfaceMesh:
    """Immutable triangulation of the fundamental polygon with identifications.

    Attributes
    ----------
    vertices : complex array, domain coordinates of all vertices
    triangles : int array (T, 3), positively oriented
    pairings : dict vertex -> (representative vertex, MobiusElement gamma)
        gamma maps the vertex onto its representative; only non-representative
        boundary vertices appear.
    quotient_of : int array, quotient index of every domain vertex
    rep_vertices : int array, domain index of each quotient vertex
    """

    def __init__(self, group: FuchsianGroup, vertices, triangles, pairings,
                 vertex_sides, refinement_level: int):
        self.group = group
        self.genus = group.genus
        self.vertices = np.asarray(vertices, dtype=complex)
        self.triangles = np.asarray(triangles, dtype=np.int64)
        self.pairings = dict(pairings)
        self.vertex_sides = dict(vertex_sides)
        self.refinement_level = int(refinement_level)

        n = len(self.vertices)
        self.is_rep = np.ones(n, dtype=bool)
        for v in self.pairings:
            self.is_rep[v] = False
        self.rep_vertices = np.nonzero(self.is_rep)[0]
        qidx = {int(v): i for i, v in enumerate(self.rep_vertices)}
        self.quotient_of = np.empty(n, dtype=np.int64)
        for v in range(n):
            if self.is_rep[v]:
                self.quotient_of[v] = qidx[v]
            else:
                rep, _ = self.pairings[v]
                if rep not in qidx:
                    raise ConstructionError("pairing target is not a representative")
                self.quotient_of[v] = qidx[rep]
        self.n_quotient = len(self.rep_vertices)
        self._coeff_cache = {}
        self._gram_cache = {}
        self._quad_cache = {}
        self._check_orientation()
        self._check_euler()

    # -- validation --------------------------------------------------------

    def _check_orientation(self):
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        cross = np.imag(np.conj(b - a) * (c - a))
        if len(cross) and np.min(cross) <= 0:
            raise ConstructionError("triangle with nonpositive orientation")

    def _edge_census(self):
        count = {}
        for tri in self.triangles:
            for i in range(3):
                e = frozenset((int(tri[i]), int(tri[(i + 1) % 3])))
                count[e] = count.get(e, 0) + 1
        return count

    def _check_euler(self):
        if len(self.triangles) == 0:
            return
        count = self._edge_census()
        n_int = sum(1 for v in count.values() if v == 2)
        n_bnd = sum(1 for v in count.values() if v == 1)
        if any(v > 2 for v in count.values()):
            raise ConstructionError("edge shared by more than two triangles")
        if n_bnd % 2:
            raise ConstructionError("odd number of boundary edges")
        chi = self.n_quotient - (n_int + n_bnd // 2) + len(self.triangles)
        if chi != 2 - 2 * self.genus:
            raise ConstructionError(
                f"Euler characteristic {chi}, expected {2 - 2 * self.genus}")

    def euler_characteristic(self) -> int:
        count = self._edge_census()
        n_int = sum(1 for v in count.values() if v == 2)
        n_bnd = sum(1 for v in count.values() if v == 1)
        return self.n_quotient - (n_int + n_bnd // 2) + len(self.triangles)

    # -- automorphy transport ----------------------------------------------

    def transport_coeffs(self, weight) -> np.ndarray:
        """Domain coefficient gamma'(z_v)^p conj(gamma'(z_v))^q per vertex.

        Domain value at v = coeff[v] * quotient value at quotient_of[v].
        """
        p, q = int(weight[0]), int(weight[1])
        key = (p, q)
        if key in self._coeff_cache:
            return self._coeff_cache[key]
        coeff = np.ones(len(self.vertices), dtype=complex)
        for v, (_, gamma) in self.pairings.items():
            d = gamma.deriv(self.vertices[v])
            coeff[v] = d ** p * np.conj(d) ** q
        self._coeff_cache[key] = coeff
        return coeff

    def domain_values(self, values, weight) -> np.ndarray:
        values = np.asarray(values)
        return self.transport_coeffs(weight) * values[self.quotient_of]

    # -- quadrature helpers --------------------------------------------------

    def triangle_geometry(self):
        """(areas, midpoints (T,3) complex) of the straight-edge triangles."""
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        areas = 0.5 * np.imag(np.conj(b - a) * (c - a))
        mids = np.stack([(a + b) / 2, (b + c) / 2, (c + a) / 2], axis=1)
        return areas, mids

    def quadrature_rule(self, levels: int = 2):
        """Composite midpoint rule data for integrals of scalar densities.

        Each mesh triangle is split `levels` times through geodesic edge
        midpoints before applying the 3-point rule, which keeps the order at
        two but shrinks the constant by ~4 per level (the straight-chord
        boundary slivers dominate the plain rule's error on coarse meshes).

        Returns (areas (K,), mids (K,3) complex, bary (K,3,3), parent (K,)):
        flat subtriangle areas, their edge midpoints, the barycentric
        coordinates of those midpoints in the parent triangle, and the parent
        index.  Cached per levels.
        """
        if levels in self._quad_cache:
            return self._quad_cache[levels]
        tri = np.stack([self.vertices[self.triangles[:, k]] for k in range(3)], axis=1)
        parent = np.arange(len(self.triangles))
        for _ in range(levels):
            a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
            mab, mbc, mca = _hyp_mid(a, b), _hyp_mid(b, c), _hyp_mid(c, a)
            out = np.empty((4 * len(tri), 3), dtype=complex)
            out[0::4] = np.stack([a, mab, mca], axis=1)
            out[1::4] = np.stack([mab, b, mbc], axis=1)
            out[2::4] = np.stack([mca, mbc, c], axis=1)
            out[3::4] = np.stack([mab, mbc, mca], axis=1)
            tri = out
            parent = np.repeat(parent, 4)
        a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
        areas = 0.5 * np.imag(np.conj(b - a) * (c - a))
        mids = np.stack([(a + b) / 2, (b + c) / 2, (c + a) / 2], axis=1)
        pa = self.vertices[self.triangles[parent, 0]][:, None]
        pb = self.vertices[self.triangles[parent, 1]][:, None]
        pc = self.vertices[self.triangles[parent, 2]][:, None]
        v0, v1, v2 = pb - pa, pc - pa, mids - pa
        dot = lambda u, v: np.real(np.conj(u) * v)
        d00, d01, d11 = dot(v0, v0), dot(v0, v1), dot(v1, v1)
        d20, d21 = dot(v2, v0), dot(v2, v1)
        den = d00 * d11 - d01 * d01
        lb = (d11 * d20 - d01 * d21) / den
        lc = (d00 * d21 - d01 * d20) / den
        bary = np.stack([1.0 - lb - lc, lb, lc], axis=2)
        rule = (areas, mids, bary, parent)
        self._quad_cache[levels] = rule
        return rule

    def section_gram(self, weight, density_power=None) -> sp.csr_matrix:
        """Hermitian quadrature Gram matrix for sections of a given weight.

        Entry (i, j) integrates conj(basis_i) * basis_j against the density
        rho^power, with power defaulting to 1 - p - q (the natural pointwise
        norm density of a weight-(p, q) tensor).  Midpoint 3-point rule.
        """
        p, q = int(weight[0]), int(weight[1])
        power = (1 - p - q) if density_power is None else density_power
        key = (p, q, power)
        if key in self._gram_cache:
            return self._gram_cache[key]
        coeff = self.transport_coeffs((p, q))
        areas, mids = self.triangle_geometry()
        W = rho(mids.ravel()).reshape(mids.shape) ** power if power != 0 else np.ones(mids.shape)
        # midpoint m_ab carries phi_a = phi_b = 1/2, phi_c = 0 and cyclic
        phi = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        rows, cols, vals = [], [], []
        qof = self.quotient_of
        for t, tri in enumerate(self.triangles):
            wpt = areas[t] / 3.0 * W[t]
            local = np.einsum("m,mi,mj->ij", wpt, phi, phi)
            cf = coeff[tri]
            for i in range(3):
                for j in range(3):
                    rows.append(qof[tri[i]])
                    cols.append(qof[tri[j]])
                    vals.append(local[i, j] * np.conj(cf[i]) * cf[j])
        M = sp.csr_matrix((vals, (rows, cols)),
                          shape=(self.n_quotient, self.n_quotient))
        self._gram_cache[key] = M
        return M

    def to_dict(self) -> dict:
        return {
            "genus": self.genus,
            "refinement": self.refinement_level,
            "vertices": [[z.real, z.imag] for z in self.vertices],
            "triangles": [[int(i) for i in t] for t in self.triangles],
            "pairings": [
                {"boundary": int(v), "rep": int(r), "gamma": g.to_dict()}
                for v, (r, g) in sorted(self.pairings.items())
            ],
            "group": self.group.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurfaceMesh":
        group = FuchsianGroup.from_dict(d["group"])
        vertices = [complex(x, y) for x, y in d["vertices"]]
        pairings = {
            int(p["boundary"]): (int(p["rep"]), MobiusElement.from_dict(p["gamma"]))
            for p in d["pairings"]
        }
        return cls(group, vertices, d["triangles"], pairings, {},
                   d["refinement"])


def _refine_once(vertices, triangles, vertex_sides):
    vertices = list(vertices)
    new_tris = []
    midpoint = {}

    def mid(i, j):
        key = (i, j) if i < j else (j, i)
        if key in midpoint:
            return midpoint[key]
        z = hyperbolic_midpoint(vertices[i], vertices[j])
        idx = len(vertices)
        vertices.append(z)
        common = vertex_sides.get(i, frozenset()) & vertex_sides.get(j, frozenset())
        if common:
            vertex_sides[idx] = common
        midpoint[key] = idx
        return idx

    for (i, j, k) in triangles:
        mij, mjk, mki = mid(i, j), mid(j, k), mid(k, i)
        new_tris.extend([(i, mij, mki), (j, mjk, mij), (k, mki, mjk),
                         (mij, mjk, mki)])
    return vertices, new_tris, vertex_sides


def build_mesh(G: FuchsianGroup, refinement: int) -> SurfaceMesh:
    """Fan triangulation of the fundamental polygon, midpoint refined.

    Boundary vertices are paired onto representative sides through the side
    pairing maps; the 4g polygon corners form a single identified vertex.
    """
    if refinement < 0:
        raise UnsupportedError("refinement must be >= 0")
    N = G.n_sides
    V = G.corners
    vertices = [0.0 + 0.0j] + [complex(v) for v in V]
    triangles = [(0, 1 + k, 1 + (k + 1) % N) for k in range(N)]
    # side k joins corners k and k+1; corner k sits on sides k-1 and k
    vertex_sides = {1 + k: frozenset({(k - 1) % N, k}) for k in range(N)}
    for _ in range(refinement):
        vertices, triangles, vertex_sides = _refine_once(
            vertices, triangles, vertex_sides)

    table = side_pairing_table(G)
    rep_sides = set(representative_sides(G))
    words = corner_words(G)

    # vertex lists per side, for geometric matching
    side_members = {s: [] for s in range(N)}
    for v, sides in vertex_sides.items():
        for s in sides:
            side_members[s].append(v)

    pairings = {}
    for v, sides in vertex_sides.items():
        z = vertices[v]
        if len(sides) == 2:
            # polygon corner: identify against corner 0 through its word
            c = int(np.argmin(np.abs(V - z)))
            if abs(V[c] - z) > 1e-9:
                raise ConstructionError("corner vertex does not match polygon corner")
            if c != 0:
                pairings[v] = (1, words[c].inverse())
            continue
        (s,) = sides
        if s in rep_sides:
            continue
        partner, M = table[s]
        zp = M.apply(z)
        cand = [u for u in side_members[partner] if len(vertex_sides[u]) == 1]
        if not cand:
            raise ConstructionError("paired side has no interior vertices")
        dists = [abs(vertices[u] - zp) for u in cand]
        best = int(np.argmin(dists))
        if dists[best] > 1e-9:
            raise ConstructionError(
                f"side pairing mismatch {dists[best]:.3e} at vertex {v}")
        pairings[v] = (cand[best], M)

    return SurfaceMesh(G, vertices, triangles, pairings, vertex_sides, refinement)


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


@dataclass
class SectionField:
    """Per-quotient-vertex complex values with an automorphy weight (p, q).

    Components obey value(z) = value(gamma z) * gamma'(z)^p * conj(gamma'(z))^q
    across the side pairings.
    """

    mesh: SurfaceMesh
    weight: tuple
    values: np.ndarray

    def __post_init__(self):
        self.weight = (int(self.weight[0]), int(self.weight[1]))
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.mesh.n_quotient,):
            raise WeightError(
                f"field needs {self.mesh.n_quotient} values, got {self.values.shape}")

    def domain_values(self) -> np.ndarray:
        return self.mesh.domain_values(self.values, self.weight)

    def copy_with(self, values) -> "SectionField":
        return SectionField(self.mesh, self.weight, values)

    def to_dict(self) -> dict:
        return {"weight": list(self.weight),
                "values": [[v.real, v.imag] for v in self.values]}

    @classmethod
    def from_dict(cls, mesh: SurfaceMesh, d: dict) -> "SectionField":
        vals = np.array([complex(x, y) for x, y in d["values"]])
        return cls(mesh, tuple(d["weight"]), vals)


def transport_across_pairing(field: SectionField, vertex: int) -> complex:
    """Domain value of the field at a paired boundary vertex.

    Returns the representative value multiplied by gamma'^p conj(gamma')^q
    with gamma' evaluated at the vertex's own disk coordinate.
    """
    mesh = field.mesh
    if vertex not in mesh.pairings:
        raise WeightError(f"vertex {vertex} has no pairing")
    rep, gamma = mesh.pairings[vertex]
    p, q = field.weight
    d = gamma.deriv(mesh.vertices[vertex])
    return complex(field.values[mesh.quotient_of[rep]] * d ** p * np.conj(d) ** q)


def hyperbolic_area(mesh: SurfaceMesh) -> float:
    """Total area of the hyperbolic metric by the composite midpoint rule."""
    if len(mesh.triangles) == 0:
        return 0.0
    areas, mids, _, _ = mesh.quadrature_rule()
    dens = rho(mids.ravel()).reshape(mids.shape)
    return float(np.sum(areas / 3.0 * np.sum(dens, axis=1)))


def quadrature(field: SectionField) -> complex:
    """Integral of a weight-(0,0) field against the hyperbolic volume form.

    Uses the same composite rule as hyperbolic_area, so the integral of the
    constant 1 reproduces the area exactly.  The piecewise-linear field is
    interpolated to the quadrature nodes through parent barycentrics.
    """
    if field.weight != (0, 0):
        raise WeightError(f"quadrature needs weight (0,0), got {field.weight}")
    mesh = field.mesh
    if len(mesh.triangles) == 0:
        return 0.0 + 0.0j
    vals = field.values[mesh.quotient_of[mesh.triangles]]  # (T, 3)
    areas, mids, bary, parent = mesh.quadrature_rule()
    dens = rho(mids.ravel()).reshape(mids.shape)
    mvals = np.einsum("kmj,kj->km", bary, vals[parent])
    return complex(np.sum(areas / 3.0 * np.sum(dens * mvals, axis=1)))


# ---------------------------------------------------------------------------
# Point location and evaluation
# ---------------------------------------------------------------------------


def reduce_to_domain(G: FuchsianGroup, z: complex, max_steps: int = 200):
    """Move z into the centered fundamental polygon by the group action.

    Greedy Dirichlet reduction: apply whichever generator or inverse
    decreases |z| until none does.  Returns (z_reduced, word) with
    word(z) = z_reduced.
    """
    z = complex(z)
    if abs(z) >= 1.0:
        raise GeometryDomainError("point outside the open unit disk")
    word = IDENTITY
    elems = list(G.generators) + [g.inverse() for g in G.generators]
    for _ in range(max_steps):
        best, best_z = None, z
        for g in elems:
            z2 = g.apply(z)
            if abs(z2) < abs(best_z) - 1e-15:
                best, best_z = g, z2
        if best is None:
            return z, word
        z, word = best_z, best.compose(word)
    raise ConstructionError("domain reduction did not terminate")


def locate_triangle(mesh: SurfaceMesh, z: complex):
    """Containing triangle and barycentric coordinates of a domain point."""
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    det = np.imag(np.conj(b - a) * (c - a))
    l1 = np.imag(np.conj(b - z) * (c - z)) / det
    l2 = np.imag(np.conj(c - z) * (a - z)) / det
    l3 = 1.0 - l1 - l2
    score = np.minimum(np.minimum(l1, l2), l3)
    t = int(np.argmax(score))
    if score[t] < -1e-9:
        raise GeometryDomainError("point is outside the fundamental polygon")
    return t, np.array([l1[t], l2[t], l3[t]])


def evaluate_field(mesh: SurfaceMesh, values, z: complex, weight=(0, 0)) -> complex:
    """Pointwise value of a section anywhere in the disk.

    The point is reduced into the fundamental polygon, interpolated linearly
    there, and transported back by the reduction word's automorphy factor.
    """
    p, q = int(weight[0]), int(weight[1])
    z0 = complex(z)
    zr, word = reduce_to_domain(mesh.group, z0)
    t, lam = locate_triangle(mesh, zr)
    dom = mesh.domain_values(np.asarray(values, dtype=complex), (p, q))
    val = np.dot(lam, dom[mesh.triangles[t]])
    d = word.deriv(z0)
    return complex(val * d ** p * np.conj(d) ** q)


def evaluate_log_metric(mesh: SurfaceMesh, log_h_values, e: float, z: complex) -> float:
    """Pointwise log of a hermitian metric sample, using its affine deck law
    log h(z) = log h(word z) + e log|word'(z)|."""
    z0 = complex(z)
    zr, word = reduce_to_domain(mesh.group, z0)
    t, lam = locate_triangle(mesh, zr)
    logs = np.asarray(log_h_values, dtype=float)
    dom = np.empty(len(mesh.vertices))
    dom[:] = logs[mesh.quotient_of]
    for v, (_, gamma) in mesh.pairings.items():
        dom[v] = logs[mesh.quotient_of[v]] + e * math.log(abs(gamma.deriv(mesh.vertices[v])))
    val = float(np.dot(lam, dom[mesh.triangles[t]]))
    return val + e * math.log(abs(word.deriv(z0)))


def random_domain_points(G: FuchsianGroup, n: int, rng, margin: float = 0.97):
    """Seeded random points inside the fundamental polygon."""
    pts = []
    Rmax = float(np.max(np.abs(G.corners)))
    while len(pts) < n:
        z = complex(rng.uniform(-Rmax, Rmax), rng.uniform(-Rmax, Rmax))
        if abs(z) >= Rmax * margin:
            continue
        zr, _ = reduce_to_domain(G, z)
        pts.append(zr * margin if abs(zr) else zr)
    return np.array(pts)
