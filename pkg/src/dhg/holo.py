"""Holomorphic structures on quaternionic line bundles over discrete surfaces.

Bundles are always handled in a trivialization.  For the bundle ``V/L``
induced by an immersion with affine coordinates ``x`` the projection is
``pi_p(a, b) = a - x_p b``, so constant sections of the trivial bundle
``V = H^2`` project to the functions ``a - x b``.

On a black triangle with vertices ``(p, q, r)`` the local holomorphic
sections are the kernel of ``c_p y_p + c_q y_q + c_r y_r``.  Coefficients
are stored per black triangle in the vertex order of the surface's black
triangle table.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BasePoint, BlackTriangleDegenerate, DegenerateTriangle
from .quatlin import (
    INVERTIBILITY_TOL, affine_chart, as_quat, c_to_qvec, complexify, from_affine,
    hpoint_distance, hpoint_normalize, moebius_apply, qinv, qmul, qnorm, right_j_c,
)

HOLOMORPHIC_TOL = 1e-9
OMEGA = np.exp(2j * np.pi / 3)


@dataclass
class Immersion:
    """Homogeneous vertex values ``(V, 2, 4)`` of a map into HP^1."""

    points: np.ndarray

    def __post_init__(self):
        self.points = hpoint_normalize(np.asarray(self.points, dtype=float))

    @classmethod
    def from_affine(cls, x):
        return cls(from_affine(as_quat(x)))

    @property
    def n_vertices(self):
        return len(self.points)

    def edge_violations(self, edges, tol=1e-9):
        """Edges pq with f(p) = f(q)."""
        e = np.asarray(edges)
        d = hpoint_distance(self.points[e[:, 0]], self.points[e[:, 1]])
        return [tuple(int(v) for v in e[k]) for k in np.flatnonzero(d <= tol)]

    def moebius(self, matrix):
        return Immersion(moebius_apply(matrix, self.points))

    def to_json(self):
        return [[p[0].tolist(), p[1].tolist()] for p in self.points]

    @classmethod
    def from_json(cls, obj):
        arr = np.asarray(obj, dtype=float)
        if arr.ndim == 2:
            return cls.from_affine(arr)
        return cls(arr)


def surface_edges(black):
    """All edges of a triangulation, read off its black triangles."""
    black = np.asarray(black)
    return np.concatenate([black[:, [0, 1]], black[:, [1, 2]], black[:, [2, 0]]])


@dataclass
class HolomorphicStructure:
    """Per black triangle coefficients ``(B, 3, 4)`` with invertible entries.

    ``black`` is the (B, 3) vertex table the coefficients refer to.  For
    structures induced by an immersion, ``x`` holds the affine chart values
    and ``chart`` the Moebius normalization that produced them.
    """

    black: np.ndarray
    coeffs: np.ndarray
    n_vertices: int
    x: np.ndarray = None
    chart: np.ndarray = None
    complex_valued: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.black = np.asarray(self.black, dtype=np.int64)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        norms = qnorm(self.coeffs)
        scale = np.max(norms, axis=1, keepdims=True)
        bad = np.argwhere(norms <= INVERTIBILITY_TOL * scale)
        if len(bad):
            raise DegenerateTriangle("structure coefficients must be invertible",
                                     triangles=sorted({int(b) for b in bad[:, 0]}))

    def residuals(self, section):
        """Per black triangle |sum c_k y_k| relative to the size of the terms."""
        y = as_quat(section)[self.black]
        terms = qmul(self.coeffs, y)
        res = qnorm(np.sum(terms, axis=1))
        scale = np.max(qnorm(terms), axis=1)
        out = np.zeros(len(res))
        nz = scale > 0
        out[nz] = res[nz] / scale[nz]
        return out

    def section_matrix(self):
        """Complex (2B, 2V) matrix of the forms acting on sections without monodromy."""
        nb = len(self.black)
        out = np.zeros((2 * nb, 2 * self.n_vertices), dtype=complex)
        for b in range(nb):
            for k in range(3):
                v = self.black[b, k]
                out[2 * b:2 * b + 2, 2 * v:2 * v + 2] += complexify(self.coeffs[b, k])
        return out

    def to_json(self):
        return {"black": self.black.tolist(), "coeffs": self.coeffs.tolist()}


def annihilator_form(xp, xq, xr):
    """Coefficients (c_p, c_q, c_r) whose kernel is the image of constant sections.

    c_p = (x_r - x_q)(x_p - x_q)^-1, c_q = (x_r - x_p)(x_q - x_p)^-1, c_r = -1,
    so c_p + c_q + c_r = 0 and c_p x_p + c_q x_q + c_r x_r = 0.
    Works on stacked arrays (..., 4).
    """
    xp, xq, xr = as_quat(xp), as_quat(xq), as_quat(xr)
    scale = np.maximum(np.maximum(qnorm(xp), qnorm(xq)), qnorm(xr))
    scale = np.where(scale > 0, scale, 1.0)
    for name, d in (("p, q", xp - xq), ("q, r", xq - xr), ("r, p", xr - xp)):
        bad = qnorm(d) <= INVERTIBILITY_TOL * scale
        if np.any(bad):
            raise DegenerateTriangle(f"vertices {name} coincide",
                                     triangles=np.flatnonzero(np.atleast_1d(bad)).tolist())
    cp = qmul(xr - xq, qinv(xp - xq))
    cq = qmul(xr - xp, qinv(xq - xp))
    cr = np.zeros_like(cp)
    cr[..., 0] = -1.0
    return cp, cq, cr


def induced_structure(surface, f):
    """The holomorphic structure of V/L for an immersion f of the surface.

    ``surface`` is anything with a ``black`` table and ``n_vertices``.
    """
    black = np.asarray(surface.black)
    pts = f.points
    d = np.stack([hpoint_distance(pts[black[:, i]], pts[black[:, (i + 1) % 3]])
                  for i in range(3)], axis=1)
    bad = np.argwhere(d <= 1e-9)
    if len(bad):
        raise BlackTriangleDegenerate("two vertices of a black triangle share their image",
                                      triangles=sorted({int(b) for b in bad[:, 0]}))
    x, chart = affine_chart(pts)
    cp, cq, cr = annihilator_form(x[black[:, 0]], x[black[:, 1]], x[black[:, 2]])
    return HolomorphicStructure(black, np.stack([cp, cq, cr], axis=1), len(pts),
                                x=x, chart=chart)


def is_holomorphic(section, hs):
    """Largest relative residual of the section over all black triangles."""
    res = hs.residuals(section)
    return float(np.max(res)) if len(res) else 0.0


def projected_constants(hs, vectors):
    """Sections a - x b of V/L for constant vectors (a, b), shape (..., 2, 4) -> (..., V, 4)."""
    vectors = np.asarray(vectors, dtype=float)
    a = vectors[..., None, 0, :]
    b = vectors[..., None, 1, :]
    return a - qmul(hs.x, b)


def linear_system(hs):
    """The standard basis (psi, phi) = (pi e1, pi e2) = (1, -x) of H."""
    psi = np.zeros_like(hs.x)
    psi[:, 0] = 1.0
    return psi, -hs.x


def holomorphic_sections(hs, tol=1e-9):
    """Quaternionic basis of the sections without monodromy, as (k, V, 4)."""
    mat = hs.section_matrix()
    _, s, vh = np.linalg.svd(mat)
    null = vh[np.sum(s > tol * s[0]):].conj()
    basis = []
    work = []
    for v in null:
        w = v.copy()
        for u in work:
            w = w - u * np.vdot(u, w)
        if np.linalg.norm(w) < 1e-6:
            continue
        w /= np.linalg.norm(w)
        basis.append(c_to_qvec(w))
        wj = right_j_c(w)
        for u in work:
            wj = wj - u * np.vdot(u, wj)
        wj /= np.linalg.norm(wj)
        work.extend([w, wj])
    return np.array(basis)


def kodaira_inverse(psi, phi, edges=None, tol=1e-9):
    """The immersion f = -psi^-1 phi, returned as homogeneous points (f, 1).

    With ``edges`` given, base point freeness along them is checked: no
    combination of psi and phi may vanish at both ends of an edge.
    """
    psi, phi = as_quat(psi), as_quat(phi)
    scale = max(float(np.max(qnorm(psi))), float(np.max(qnorm(phi))))
    zero = np.flatnonzero(qnorm(psi) <= tol * scale)
    if len(zero):
        raise BasePoint("psi vanishes; choose another basis of the linear system",
                        vertices=zero.tolist())
    f = -qmul(qinv(psi), phi)
    imm = Immersion.from_affine(f)
    if edges is not None:
        bad = imm.edge_violations(edges)
        if bad:
            raise BasePoint("a section of the system vanishes on an edge", edges=bad)
    return imm


# ---------------------------------------------------------------------------
# planar patches and the equilateral structure

class PlanarPatch:
    """Parallelogram patch ``0 <= x <= cols, 0 <= y <= rows`` of the triangular lattice."""

    def __init__(self, cols, rows):
        self.cols, self.rows = int(cols), int(rows)
        ys, xs = np.divmod(np.arange((rows + 1) * (cols + 1)), cols + 1)
        self.vertex_coords = np.stack([xs, ys], axis=-1)
        self.n_vertices = len(xs)
        idx = lambda x, y: y * (cols + 1) + x  # noqa: E731
        black, white = [], []
        for y in range(rows):
            for x in range(cols):
                black.append((idx(x, y), idx(x + 1, y), idx(x, y + 1)))
                white.append((idx(x + 1, y), idx(x + 1, y + 1), idx(x, y + 1)))
        self.black = np.array(black)
        self.white = np.array(white)

    def positions(self):
        """Complex positions of the vertices under the equilateral embedding."""
        p = self.vertex_coords
        return p[:, 0] + p[:, 1] * np.exp(1j * np.pi / 3)


def vacuum_structure(patch):
    """Complex structure (1, omega, omega^2) on every black triangle.

    Its holomorphic sections map black triangles to positively oriented
    equilateral triangles.
    """
    nb = len(patch.black)
    coeffs = np.stack([as_quat(np.full(nb, c)) for c in (1.0 + 0j, OMEGA, OMEGA ** 2)], axis=1)
    return HolomorphicStructure(patch.black, coeffs, patch.n_vertices, complex_valued=True)


def chart_points(f, chart):
    """Homogeneous points after the recorded chart normalization."""
    return moebius_apply(chart, f.points)


__all__ = [
    "Immersion", "HolomorphicStructure", "PlanarPatch", "annihilator_form",
    "induced_structure", "is_holomorphic", "kodaira_inverse", "linear_system",
    "holomorphic_sections", "projected_constants", "vacuum_structure",
    "surface_edges",
]
