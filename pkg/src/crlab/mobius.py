"""SU(1,1) Mobius arithmetic and genus-g surface groups on the Poincare disk.

A MobiusElement is a unit-determinant 2x2 complex matrix acting on the open
disk by z -> (a z + b)/(c z + d), carrying an extra unit-modulus phase used
by the circle-bundle action.  ``fuchsian_group`` builds the side-pairing
generators of the regular 4g-gon surface group (the Bolza group for g = 2)
together with the combinatorial data the mesher needs: the polygon corners,
the side pairing table, and the corner identification words.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryDomainError, UnsupportedError, ConstructionError

_DET_TOL = 1e-12


def _as_complex(x):
    return complex(x)


@dataclass(frozen=True)
class MobiusElement:
    """Unit-determinant Mobius transformation with a U(1) phase.

    The phase does not affect the disk action; it multiplies the fiber
    coordinate of the bundle action (see line bundle module).
    """

    a: complex
    b: complex
    c: complex
    d: complex
    phase: complex = 1.0 + 0.0j

    def __post_init__(self):
        object.__setattr__(self, "a", _as_complex(self.a))
        object.__setattr__(self, "b", _as_complex(self.b))
        object.__setattr__(self, "c", _as_complex(self.c))
        object.__setattr__(self, "d", _as_complex(self.d))
        object.__setattr__(self, "phase", _as_complex(self.phase))

    # -- basic structure -------------------------------------------------

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def normalized(self) -> "MobiusElement":
        """Rescale to det = 1 (principal square root branch)."""
        det = self.det
        if det == 0:
            raise GeometryDomainError("singular matrix cannot be normalized")
        s = cmath.sqrt(det)
        ph = self.phase / abs(self.phase) if self.phase != 0 else 1.0
        return MobiusElement(self.a / s, self.b / s, self.c / s, self.d / s, ph)

    def su11_defect(self) -> float:
        """Deviation from the SU(1,1) shape d = conj(a), c = conj(b), det 1."""
        return max(
            abs(self.d - self.a.conjugate()),
            abs(self.c - self.b.conjugate()),
            abs(self.det - 1.0),
        )

    def is_su11(self, tol: float = 1e-10) -> bool:
        return self.su11_defect() < tol

    # -- group operations -------------------------------------------------

    def compose(self, other: "MobiusElement") -> "MobiusElement":
        """self after other, matrices multiply and phases multiply."""
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        out = MobiusElement(a, b, c, d, self.phase * other.phase).normalized()
        if abs(out.det - 1.0) > _DET_TOL:
            raise ConstructionError(f"determinant drift {abs(out.det - 1.0):.3e}")
        return out

    def inverse(self) -> "MobiusElement":
        det = self.det
        inv_phase = self.phase.conjugate() / abs(self.phase) ** 2
        return MobiusElement(self.d / det, -self.b / det, -self.c / det,
                             self.a / det, inv_phase).normalized()

    def __matmul__(self, other):
        return self.compose(other)

    # -- disk action -------------------------------------------------------

    def apply(self, z):
        """Evaluate (az+b)/(cz+d).  Accepts scalars or numpy arrays."""
        z = np.asarray(z, dtype=complex)
        den = self.c * z + self.d
        if np.any(np.abs(den) < 1e-14):
            raise GeometryDomainError("Mobius denominator vanished")
        out = (self.a * z + self.b) / den
        return out if out.ndim else complex(out)

    def deriv(self, z):
        """gamma'(z) = det/(cz+d)^2."""
        z = np.asarray(z, dtype=complex)
        den = self.c * z + self.d
        if np.any(np.abs(den) < 1e-14):
            raise GeometryDomainError("Mobius denominator vanished")
        out = self.det / den ** 2
        return out if out.ndim else complex(out)

    def log_deriv2(self, z):
        """gamma''(z)/gamma'(z) = -2c/(cz+d), the logarithmic second derivative."""
        z = np.asarray(z, dtype=complex)
        den = self.c * z + self.d
        if np.any(np.abs(den) < 1e-14):
            raise GeometryDomainError("Mobius denominator vanished")
        out = -2.0 * self.c / den
        return out if out.ndim else complex(out)

    # -- geometry ----------------------------------------------------------

    def is_hyperbolic(self, tol: float = 1e-9) -> bool:
        return abs(self.trace) > 2.0 + tol

    def translation_length(self) -> float:
        t = abs(self.trace) / 2.0
        if t <= 1.0:
            raise GeometryDomainError("not a hyperbolic element")
        return 2.0 * math.acosh(t)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        def c2(v):
            return [v.real, v.imag]
        return {"a": c2(self.a), "b": c2(self.b), "c": c2(self.c),
                "d": c2(self.d), "phase": cmath.phase(self.phase)}

    @classmethod
    def from_dict(cls, d: dict) -> "MobiusElement":
        def cplx(v):
            return complex(v[0], v[1])
        return cls(cplx(d["a"]), cplx(d["b"]), cplx(d["c"]), cplx(d["d"]),
                   cmath.exp(1j * d.get("phase", 0.0)))


IDENTITY = MobiusElement(1.0, 0.0, 0.0, 1.0)


def mobius_apply(A: MobiusElement, z):
    """Disk action of A on z.  Raises if |z| >= 1 or the denominator vanishes."""
    zz = np.asarray(z, dtype=complex)
    if np.any(np.abs(zz) >= 1.0):
        raise GeometryDomainError("point outside the open unit disk")
    return A.apply(z)


def mobius_compose(A: MobiusElement, B: MobiusElement) -> MobiusElement:
    return A.compose(B)


def rotation(theta: float, phase: complex = 1.0) -> MobiusElement:
    """Rotation of the disk by angle theta about 0, as an SU(1,1) element."""
    h = cmath.exp(0.5j * theta)
    return MobiusElement(h, 0.0, 0.0, h.conjugate(), phase)


def point_to_zero(p: complex) -> MobiusElement:
    """SU(1,1) element sending p to the origin."""
    p = complex(p)
    if abs(p) >= 1.0:
        raise GeometryDomainError("point outside the open unit disk")
    s = 1.0 / math.sqrt(1.0 - abs(p) ** 2)
    return MobiusElement(s, -p * s, -p.conjugate() * s, s)


def pair_isometry(P, Q, Pp, Qp) -> MobiusElement:
    """SU(1,1) element sending the geodesic segment (P,Q) onto (Pp,Qp).

    P goes to Pp and Q to Qp; the two segments must have the same
    hyperbolic length.
    """
    M1 = point_to_zero(P)
    q1 = M1.apply(Q)
    M1 = rotation(-cmath.phase(q1)).compose(M1)
    M2 = point_to_zero(Pp)
    q2 = M2.apply(Qp)
    M2 = rotation(-cmath.phase(q2)).compose(M2)
    if abs(abs(q1) - abs(q2)) > 1e-10:
        raise ConstructionError("segments have different hyperbolic lengths")
    return M2.inverse().compose(M1)


def random_su11(rng, max_radius: float = 0.85, phase: bool = False) -> MobiusElement:
    """Random SU(1,1) element; used by verification sweeps."""
    b = max_radius * rng.uniform(0.0, 1.0) * cmath.exp(2j * math.pi * rng.uniform(0, 1))
    # |a|^2 - |b|^2 = 1
    a = math.sqrt(1.0 + abs(b) ** 2) * cmath.exp(2j * math.pi * rng.uniform(0, 1))
    u = cmath.exp(2j * math.pi * rng.uniform(0, 1)) if phase else 1.0
    return MobiusElement(a, b, b.conjugate(), a.conjugate(), u)


# ---------------------------------------------------------------------------
# Regular 4g-gon surface group
# ---------------------------------------------------------------------------


def polygon_corners(genus: int) -> np.ndarray:
    """Corners of the regular hyperbolic 4g-gon centered at 0.

    The polygon with interior corner angle 2*pi/(4g) tiles the disk under
    the surface group; its corners sit at Euclidean radius
    R = sqrt((cot^2(pi/4g) - 1)/(cot^2(pi/4g) + 1)) and angles
    pi(2k-1)/(4g).  For g = 2 the corner hyperbolic radius satisfies
    cosh(r) = cot^2(pi/8).
    """
    if genus < 2:
        raise UnsupportedError("genus must be >= 2")
    N = 4 * genus
    cot = 1.0 / math.tan(math.pi / N)
    cosh_rv = cot * cot
    R = math.sqrt((cosh_rv - 1.0) / (cosh_rv + 1.0))
    return np.array([R * cmath.exp(1j * math.pi * (2 * k - 1) / N) for k in range(N)])


@dataclass(frozen=True)
class FuchsianGroup:
    """Genus-g surface group with side-pairing generators a1,b1,...,ag,bg.

    ``chern_m`` is the twisting integer of the associated circle bundle
    (the bundle degree is -m).  ``phases`` are the U(1) holonomy angles of
    the generators; ``central_angle`` is the angle of the central element,
    constrained to an m-th root of unity.
    """

    genus: int
    chern_m: int
    generators: tuple
    phases: tuple
    central_angle: float = 0.0
    corners: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n_sides(self) -> int:
        return 4 * self.genus

    def generator(self, i: int) -> MobiusElement:
        return self.generators[i]

    def to_dict(self) -> dict:
        return {
            "genus": self.genus,
            "m": self.chern_m,
            "generators": [g.to_dict() for g in self.generators],
            "phases": list(self.phases),
            "central_angle": self.central_angle,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FuchsianGroup":
        gens = tuple(MobiusElement.from_dict(g) for g in d["generators"])
        return cls(genus=int(d["genus"]), chern_m=int(d["m"]), generators=gens,
                   phases=tuple(float(p) for p in d["phases"]),
                   central_angle=float(d.get("central_angle", 0.0)),
                   corners=polygon_corners(int(d["genus"])))


def fuchsian_group(genus: int, m: int, phases=None, central_angle: float = 0.0) -> FuchsianGroup:
    """Surface group of the regular 4g-gon with all side pairings hyperbolic.

    Sides are numbered so that side k joins corner k to corner k+1.  In each
    block of four consecutive sides, side 4t+2 is glued to side 4t with
    orientation reversal by the generator a_{t+1}, and side 4t+3 to side
    4t+1 by the inverse of b_{t+1}.  With that labeling the product of
    commutators [a_1,b_1]...[a_g,b_g] is projectively the identity.
    """
    if not isinstance(genus, int) or genus < 2:
        raise UnsupportedError("genus must be an integer >= 2")
    if not isinstance(m, int) or m < 1:
        raise UnsupportedError("m must be a positive integer")
    N = 4 * genus
    if phases is None:
        phases = [0.0] * (2 * genus)
    phases = [float(p) for p in phases]
    if len(phases) != 2 * genus:
        raise UnsupportedError(f"need {2 * genus} generator phases, got {len(phases)}")
    # the central element must be an m-th root of unity
    root_defect = abs(cmath.exp(1j * m * central_angle) - 1.0)
    if root_defect > 1e-9:
        raise UnsupportedError("central angle must satisfy m*angle = 0 mod 2*pi")

    V = polygon_corners(genus)

    def corner(k):
        return V[k % N]

    gens = []
    for t in range(genus):
        # a_t maps side 4t+2 onto side 4t reversing endpoints
        Ma = pair_isometry(corner(4 * t + 2), corner(4 * t + 3),
                           corner(4 * t + 1), corner(4 * t))
        # b_t is the inverse of the map gluing side 4t+3 onto side 4t+1
        Mb = pair_isometry(corner(4 * t + 3), corner(4 * t + 4),
                           corner(4 * t + 2), corner(4 * t + 1))
        a = MobiusElement(Ma.a, Ma.b, Ma.c, Ma.d, cmath.exp(1j * phases[2 * t]))
        b_inv = Mb.inverse()
        b = MobiusElement(b_inv.a, b_inv.b, b_inv.c, b_inv.d,
                          cmath.exp(1j * phases[2 * t + 1]))
        gens.extend([a, b])

    group = FuchsianGroup(genus=genus, chern_m=m, generators=tuple(gens),
                          phases=tuple(phases), central_angle=float(central_angle),
                          corners=V)
    res = group_relation_residual(group)
    if res > 1e-10:
        raise ConstructionError(f"surface-group relation residual {res:.3e}")
    return group


def group_relation_residual(G: FuchsianGroup) -> float:
    """Frobenius distance of [a1,b1]...[ag,bg] to the projective identity.

    The product is compared against both +I and -I (the action factors
    through PU(1,1)); the smaller distance is returned.
    """
    P = np.eye(2, dtype=complex)
    for t in range(G.genus):
        a = G.generators[2 * t].matrix
        b = G.generators[2 * t + 1].matrix
        comm = a @ b @ np.linalg.inv(a) @ np.linalg.inv(b)
        P = P @ comm
    I = np.eye(2)
    return float(min(np.linalg.norm(P - I), np.linalg.norm(P + I)))


def side_pairing_table(G: FuchsianGroup):
    """Per-side pairing map.  Entry s is (partner side, M) with M carrying
    the points of side s onto side partner (endpoint order reversed)."""
    N = G.n_sides
    table = [None] * N
    for t in range(G.genus):
        a = G.generators[2 * t]
        b = G.generators[2 * t + 1]
        table[(4 * t + 2) % N] = ((4 * t) % N, a)
        table[(4 * t + 3) % N] = ((4 * t + 1) % N, b.inverse())
        table[(4 * t) % N] = ((4 * t + 2) % N, a.inverse())
        table[(4 * t + 1) % N] = ((4 * t + 3) % N, b)
    return table


def representative_sides(G: FuchsianGroup):
    """Sides kept as identification representatives (targets of the gluing)."""
    reps = []
    for t in range(G.genus):
        reps.extend([4 * t, 4 * t + 1])
    return reps


def corner_words(G: FuchsianGroup):
    """Group words W_c with W_c(corner 0) = corner c, for every corner.

    All 4g corners belong to a single orbit; the words are found by a
    breadth-first walk over the side pairings.  The pairing of side s sends
    corner s to corner partner+1 and corner s+1 to corner partner.
    """
    N = G.n_sides
    table = side_pairing_table(G)
    words = {0: IDENTITY}
    frontier = [0]
    while frontier:
        nxt = []
        for src in frontier:
            for s in range(N):
                p, M = table[s]
                for corner_src, corner_dst in (((s) % N, (p + 1) % N), ((s + 1) % N, p % N)):
                    if corner_src == src and corner_dst not in words:
                        words[corner_dst] = M.compose(words[src])
                        nxt.append(corner_dst)
        frontier = nxt
    if len(words) != N:
        raise ConstructionError("corner orbit is not a single cycle")
    V = G.corners if G.corners is not None else polygon_corners(G.genus)
    out = []
    for c in range(N):
        W = words[c]
        if abs(W.apply(V[0]) - V[c]) > 1e-9:
            raise ConstructionError(f"corner word {c} misses its corner")
        out.append(W)
    return out
