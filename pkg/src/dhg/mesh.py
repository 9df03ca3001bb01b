"""Combinatorics of discrete tori with regular combinatorics.

A regular torus is the quotient of the equilateral triangulation of the
plane by a rank two lattice.  Lattice points are integer pairs ``(x, y)``
standing for ``x e1 + y e2`` with ``e1 = (1, 0)`` and ``e2 = (1/2, sqrt(3)/2)``.
Black triangles point up and are labelled by their lower left vertex,
``{(x, y), (x+1, y), (x, y+1)}``; white triangles point down and are
labelled by ``(x, y)`` for ``{(x+1, y), (x+1, y+1), (x, y+1)}``.  Since a
regular torus has as many black and white triangles as vertices, all three
index sets are the same set of lattice cosets.
"""

from dataclasses import dataclass
from math import gcd

import numpy as np

from .errors import NonPositiveBasis, NonRegularQuotient, TooSmall

SQRT3 = np.sqrt(3.0)

# ccw neighbour offsets of a vertex
NEIGHBOUR_OFFSETS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def embed(p):
    """Euclidean position of lattice points (..., 2)."""
    p = np.asarray(p, dtype=float)
    return np.stack([p[..., 0] + 0.5 * p[..., 1], 0.5 * SQRT3 * p[..., 1]], axis=-1)


def gram2(u, v):
    """Twice the Euclidean inner product of two lattice vectors (an integer)."""
    return 2 * u[0] * v[0] + u[0] * v[1] + u[1] * v[0] + 2 * u[1] * v[1]


def angle_at_most_60(u, v):
    """True when the angle between lattice vectors u and v is <= pi/3."""
    g = gram2(u, v)
    return g >= 0 and 4 * g * g >= gram2(u, u) * gram2(v, v)


def rotate(p, turns=1):
    """Rotation by turns * 2pi/3 about the origin, (x, y) -> (-x-y, x)."""
    p = np.asarray(p, dtype=np.int64)
    for _ in range(turns % 3):
        p = np.stack([-p[..., 0] - p[..., 1], p[..., 0]], axis=-1)
    return p


# Under a rotation by `turns`, the roles (lower left, lower right, top) of a
# black triangle move to these slots of the rotated triangle, and the lower
# left corner of the image is rotate(p) + offset.
_ROLE_SLOTS = {0: (0, 1, 2), 1: (1, 2, 0), 2: (2, 0, 1)}
_LL_OFFSET = {0: (0, 0), 1: (-1, 0), 2: (0, -1)}


@dataclass(frozen=True)
class LatticeBasis:
    gamma: tuple
    eta: tuple

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(int(c) for c in self.gamma))
        object.__setattr__(self, "eta", tuple(int(c) for c in self.eta))

    @property
    def det(self):
        return self.gamma[0] * self.eta[1] - self.gamma[1] * self.eta[0]

    def to_json(self):
        return {"gamma": list(self.gamma), "eta": list(self.eta)}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(obj["gamma"]), tuple(obj["eta"]))


def hermite_normal_form(basis):
    """(A, B, C) with lattice basis (A, 0), (B, C), A, C > 0 and 0 <= B < A."""
    g, e = basis.gamma, basis.eta
    det = basis.det
    if det <= 0:
        raise NonPositiveBasis("basis must be positively oriented", det=det)
    c = gcd(g[1], e[1])
    if c == 0:
        raise NonPositiveBasis("degenerate basis", det=det)
    # u g1 + v e1 = c
    u, v = _bezout(g[1], e[1])
    x = u * g[0] + v * e[0]
    a = det // c
    return a, x % a, c


def _bezout(p, q):
    """(u, v) with u p + v q = gcd(p, q) >= 0."""
    old_r, r = p, q
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        quo = old_r // r
        old_r, r = r, old_r - quo * r
        old_s, s = s, old_s - quo * s
        old_t, t = t, old_t - quo * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t


class BicoloredTriangulation:
    """Oriented triangulated surface with black and white faces.

    Faces are vertex triples in counterclockwise order.  Local edge ``k`` of
    a face runs from its vertex ``k`` to vertex ``k+1``.  ``black_adj[b, k]``
    is ``(w, l)``: the white face across local edge ``k`` of ``b`` and the
    local index of the same edge in ``w``; ``white_adj`` is the mirror table.
    """

    def __init__(self, n_vertices, black, white, black_adj, white_adj):
        self.n_vertices = int(n_vertices)
        self.black = np.asarray(black, dtype=np.int64)
        self.white = np.asarray(white, dtype=np.int64)
        self.black_adj = np.asarray(black_adj, dtype=np.int64)
        self.white_adj = np.asarray(white_adj, dtype=np.int64)

    def valences(self):
        """Number of edges at each vertex (each edge counted from its face pair)."""
        counts = np.zeros(self.n_vertices, dtype=np.int64)
        # every edge borders exactly one black face
        for tri in self.black:
            for k in range(3):
                counts[tri[k]] += 1
                counts[tri[(k + 1) % 3]] += 1
        return counts

    def black_cycle_around(self, v):
        """Black faces around v in counterclockwise order, with the white faces between."""
        hits = np.argwhere(self.black == v)
        b, s = int(hits[0, 0]), int(hits[0, 1])
        start = b
        blacks, whites = [], []
        while True:
            blacks.append(b)
            w, t = self.black_adj[b, (s + 2) % 3]
            w, t = int(w), int(t)
            whites.append((w, t))
            b, e = self.white_adj[w, (t + 2) % 3]
            b, e = int(b), int(e)
            s = e
            if b == start:
                break
            if len(blacks) > 3 * len(self.black):
                raise NonRegularQuotient("inconsistent incidence around vertex", vertex=v)
        return blacks, whites

    def check(self):
        """Verify the adjacency tables are mutually consistent."""
        for b in range(len(self.black)):
            for k in range(3):
                w, l = self.black_adj[b, k]
                if tuple(self.white_adj[w, l]) != (b, k):
                    return False
                bu, bv = self.black[b, k], self.black[b, (k + 1) % 3]
                wu, wv = self.white[w, l], self.white[w, (l + 1) % 3]
                if (bu, bv) != (wv, wu):
                    return False
        return True


def derive_triangulation(tri):
    """Cyclic role permutation: vertices <- black, black <- white, white <- vertices."""
    nb, nw, nv = len(tri.black), len(tri.white), tri.n_vertices
    new_black = np.array([[tri.white_adj[w, k, 0] for k in range(3)] for w in range(nw)])
    new_white = np.zeros((nv, 3), dtype=np.int64)
    new_white_adj = np.zeros((nv, 3, 2), dtype=np.int64)
    new_black_adj = np.zeros((nw, 3, 2), dtype=np.int64)
    for v in range(nv):
        blacks, whites = tri.black_cycle_around(v)
        if len(blacks) != 3:
            raise NonRegularQuotient("derived decomposition needs valence six", vertex=v)
        new_white[v] = blacks
        for s, (w, t) in enumerate(whites):
            k = (t - 1) % 3
            new_white_adj[v, s] = (w, k)
            new_black_adj[w, k] = (v, s)
    out = BicoloredTriangulation(nb, new_black, new_white, new_black_adj, new_white_adj)
    return out


def canonical_form(tri, start_black=0, rotation=0):
    """Relabelling-invariant encoding of the triangulation seen from a flag."""
    nb = len(tri.black)
    black_label = -np.ones(nb, dtype=np.int64)
    black_rot = np.zeros(nb, dtype=np.int64)
    white_label = -np.ones(len(tri.white), dtype=np.int64)
    white_rot = np.zeros(len(tri.white), dtype=np.int64)
    vertex_label = -np.ones(tri.n_vertices, dtype=np.int64)
    order = [start_black]
    black_label[start_black] = 0
    black_rot[start_black] = rotation
    nv = nw = 0
    head = 0
    while head < len(order):
        b = order[head]
        head += 1
        r = black_rot[b]
        for kk in range(3):
            k = (r + kk) % 3
            vert = tri.black[b, k]
            if vertex_label[vert] < 0:
                vertex_label[vert] = nv
                nv += 1
            w, l = tri.black_adj[b, k]
            if white_label[w] < 0:
                white_label[w] = nw
                white_rot[w] = l
                nw += 1
                for ll in (1, 2):
                    b2, e2 = tri.white_adj[w, (l + ll) % 3]
                    if black_label[b2] < 0:
                        black_label[b2] = len(order)
                        black_rot[b2] = e2
                        order.append(int(b2))
    if len(order) != nb or np.any(vertex_label < 0):
        raise NonRegularQuotient("triangulation is not connected")

    def faces(table, adj, labels, rots, nbr_labels):
        out = [None] * len(table)
        for f in range(len(table)):
            r = rots[f]
            verts = tuple(int(vertex_label[table[f, (r + i) % 3]]) for i in range(3))
            nbrs = tuple(int(nbr_labels[adj[f, (r + i) % 3, 0]]) for i in range(3))
            out[labels[f]] = (verts, nbrs)
        return tuple(out)

    return (faces(tri.black, tri.black_adj, black_label, black_rot, white_label),
            faces(tri.white, tri.white_adj, white_label, white_rot, black_label))


def is_isomorphic(t1, t2):
    """Colour and orientation preserving combinatorial isomorphism test."""
    if (t1.n_vertices, len(t1.black), len(t1.white)) != \
            (t2.n_vertices, len(t2.black), len(t2.white)):
        return False
    ref = canonical_form(t1, 0, 0)
    for b in range(len(t2.black)):
        for r in range(3):
            if canonical_form(t2, b, r) == ref:
                return True
    return False


class RegularTorus:
    """Quotient of the black and white equilateral triangulation by a lattice.

    Vertices are indexed row-major over the fundamental domain
    ``{(x, y): 0 <= x < A, 0 <= y < C}`` of the Hermite normal form
    ``(A, 0), (B, C)`` of the lattice.  Black and white triangles share the
    vertex indexing through their labelling lattice point.
    """

    def __init__(self, basis):
        if not isinstance(basis, LatticeBasis):
            basis = LatticeBasis(*basis)
        if basis.det <= 0:
            raise NonPositiveBasis("basis must be positively oriented", det=basis.det)
        self.basis = basis
        self.hnf = hermite_normal_form(basis)
        a, _, c = self.hnf
        self.n_vertices = a * c
        ys, xs = np.divmod(np.arange(self.n_vertices), a)
        self.vertex_coords = np.stack([xs, ys], axis=-1)
        for step in ((1, 0), (0, 1), (1, -1)):
            if self.contains(step):
                raise NonRegularQuotient(
                    "a triangle of the quotient repeats a vertex",
                    basis=basis.to_json(), vector=list(step))
        p = self.vertex_coords
        self.black = np.stack([self.index(p), self.index(p + (1, 0)),
                               self.index(p + (0, 1))], axis=-1)
        self.white = np.stack([self.index(p + (1, 0)), self.index(p + (1, 1)),
                               self.index(p + (0, 1))], axis=-1)
        self.neighbours = np.stack([self.index(p + off) for off in NEIGHBOUR_OFFSETS],
                                   axis=-1)

    # lattice arithmetic -------------------------------------------------
    def reduce(self, points):
        """Canonical coset representatives of lattice points (..., 2)."""
        a, b, c = self.hnf
        p = np.asarray(points, dtype=np.int64)
        k = np.floor_divide(p[..., 1], c)
        y = p[..., 1] - k * c
        x = np.mod(p[..., 0] - k * b, a)
        return np.stack([x, y], axis=-1)

    def index(self, points):
        r = self.reduce(points)
        return r[..., 1] * self.hnf[0] + r[..., 0]

    def contains(self, vector):
        """Whether a lattice vector lies in the period lattice."""
        r = self.reduce(np.asarray(vector))
        return bool(r[0] == 0 and r[1] == 0)

    # counts and views ---------------------------------------------------
    @property
    def n_black(self):
        return len(self.black)

    @property
    def n_white(self):
        return len(self.white)

    def black_vertices_at(self, ll):
        """Lattice points (ll, lr, top) of the black triangle with lower left ll."""
        ll = np.asarray(ll, dtype=np.int64)
        return np.stack([ll, ll + (1, 0), ll + (0, 1)], axis=-2)

    def white_vertices_at(self, pos):
        pos = np.asarray(pos, dtype=np.int64)
        return np.stack([pos + (1, 0), pos + (1, 1), pos + (0, 1)], axis=-2)

    def white_black_neighbours_at(self, pos):
        """Lower left corners of the black triangles across the white edges.

        Ordered like the white edges: (v0 v1), (v1 v2), (v2 v0).
        """
        pos = np.asarray(pos, dtype=np.int64)
        return np.stack([pos + (1, 0), pos + (0, 1), pos], axis=-2)

    def triangulation(self):
        """The torus as an abstract :class:`BicoloredTriangulation`."""
        p = self.vertex_coords
        black_adj = np.stack([
            np.stack([self.index(p + (0, -1)), np.full(len(p), 1)], axis=-1),
            np.stack([self.index(p), np.full(len(p), 2)], axis=-1),
            np.stack([self.index(p + (-1, 0)), np.full(len(p), 0)], axis=-1),
        ], axis=1)
        white_adj = np.stack([
            np.stack([self.index(p + (1, 0)), np.full(len(p), 2)], axis=-1),
            np.stack([self.index(p + (0, 1)), np.full(len(p), 0)], axis=-1),
            np.stack([self.index(p), np.full(len(p), 1)], axis=-1),
        ], axis=1)
        return BicoloredTriangulation(self.n_vertices, self.black, self.white,
                                      black_adj, white_adj)

    def valences(self):
        return self.triangulation().valences()

    def index_table(self):
        """Rows (kind, index, x, y) for vertices, black and white triangles."""
        rows = []
        for kind in ("vertex", "black", "white"):
            for i, (x, y) in enumerate(self.vertex_coords):
                rows.append((kind, i, int(x), int(y)))
        return rows

    def to_json(self):
        return self.basis.to_json()

    def __repr__(self):
        return f"RegularTorus(gamma={self.basis.gamma}, eta={self.basis.eta})"


def build_regular_torus(basis):
    return RegularTorus(basis)


def thin_torus(n):
    """Torus of length n and thickness one.

    The lower left vertex of each black triangle is identified with the
    upper right vertex of the white triangle right of it, so the period
    lattice is spanned by (n, 0) and (1, 1).  Black triangle k and white
    triangle k then carry the number of their lower left and upper right
    vertex respectively, and vertex k sits at (k, 0).
    """
    if n < 3:
        raise TooSmall("a thin torus needs at least three vertices", n=n)
    return RegularTorus(LatticeBasis((n, 0), (1, 1)))


# ---------------------------------------------------------------------------
# adapted bases

def _direction_of(vector):
    """(turns, length) with vector = rotate((length, 0), turns), or None."""
    for turns in range(3):
        x, y = rotate(np.asarray(vector), -turns)
        if y == 0 and x > 0:
            return turns, int(x)
    return None


def adapted_basis(torus, direction):
    """Normalized adapted basis for one of the three edge directions.

    gamma is the shortest period along the direction with the black
    triangles touching it on its left; eta is the unique completion with
    angle(gamma, eta) <= pi/3 < angle(gamma, eta - gamma).
    """
    d = int(direction) % 3
    n = 1
    while not torus.contains(rotate((n, 0), d)):
        n += 1
    m = torus.n_vertices // n
    for a in range(n):
        if torus.contains(rotate((a, m), d)):
            break
    else:  # pragma: no cover - guaranteed by lattice theory
        raise NonRegularQuotient("no completion of the adapted basis")
    g = tuple(int(c) for c in rotate((n, 0), d))
    e = tuple(int(c) for c in rotate((a, m), d))
    return LatticeBasis(g, e)


def normalize_adapted_basis(basis):
    """Replace eta by eta + k gamma with angle(g, e) <= pi/3 < angle(g, e - g)."""
    g = basis.gamma
    e = basis.eta
    for _ in range(10_000):
        if not angle_at_most_60(g, e):
            e = (e[0] + g[0], e[1] + g[1])
            continue
        shifted = (e[0] - g[0], e[1] - g[1])
        if angle_at_most_60(g, shifted):
            e = shifted
            continue
        return LatticeBasis(g, e)
    raise NonPositiveBasis("basis could not be normalized")  # pragma: no cover


def length_and_thickness(torus, basis):
    info = _direction_of(basis.gamma)
    if info is None:
        raise NonPositiveBasis("gamma is not parallel to an edge direction")
    n = info[1]
    return n, torus.n_vertices // n


# ---------------------------------------------------------------------------
# fundamental domains

class FundamentalDomain:
    """Compatible fundamental domain ``v0 + t1 gamma + t2 eta``, t in [0, 1).

    Work happens in a rotated frame in which gamma = (n, 0) and
    eta = (a, m) with 0 <= a < n.  Row ``y`` holds the n vertices
    ``v0 + (s_y + k, y)`` with ``s_y = ceil(y a / m)``.  Crossing gamma
    multiplies section values by mu, crossing eta by lambda.
    """

    def __init__(self, torus, basis, base=(0, 0)):
        info = _direction_of(basis.gamma)
        if info is None:
            raise NonPositiveBasis("gamma is not parallel to an edge direction")
        self.torus = torus
        self.basis = basis
        self.turns, self.n = info
        self.m = torus.n_vertices // self.n
        eta_rot = rotate(np.asarray(basis.eta), -self.turns)
        if int(eta_rot[1]) != self.m or not 0 <= int(eta_rot[0]) < self.n:
            raise NonPositiveBasis("basis is not a normalized adapted basis",
                                   basis=basis.to_json())
        self.a = int(eta_rot[0])
        self.base = np.asarray(rotate(np.asarray(base), -self.turns), dtype=np.int64)
        self.starts = [-((-y * self.a) // self.m) for y in range(self.m + 1)]
        rows = []
        for y in range(self.m):
            xs = self.starts[y] + np.arange(self.n)
            rows.append(np.stack([xs, np.full(self.n, y)], axis=-1) + self.base)
        self.rows_rot = np.stack(rows)  # (m, n, 2) rotated frame
        self.vertex_ids = torus.index(self.to_original(self.rows_rot))
        flat = self.vertex_ids.reshape(-1)
        if len(set(flat.tolist())) != torus.n_vertices:
            raise NonRegularQuotient("fundamental domain does not cover the torus")
        self.position = np.empty(torus.n_vertices, dtype=np.int64)
        self.position[flat] = np.arange(len(flat))
        self.shaded = self._shaded_triangles()

    @property
    def length(self):
        return self.n

    @property
    def thickness(self):
        return self.m

    def to_original(self, p_rot):
        return rotate(np.asarray(p_rot, dtype=np.int64), self.turns)

    def locate(self, p_rot):
        """(flat domain position, mu exponent, lambda exponent) of a rotated lattice point."""
        rel = np.asarray(p_rot, dtype=np.int64) - self.base
        lam = int(np.floor_divide(rel[1], self.m))
        x = int(rel[0]) - lam * self.a
        y = int(rel[1]) - lam * self.m
        off = x - self.starts[y]
        mu = off // self.n
        col = off - mu * self.n
        return y * self.n + col, int(mu), lam

    def black_triangle(self, ll_rot):
        """Torus black index and the original slots of the rotated roles (ll, lr, top)."""
        ll_orig = rotate(np.asarray(ll_rot, dtype=np.int64), self.turns) \
            + np.asarray(_LL_OFFSET[self.turns])
        return int(self.torus.index(ll_orig)), _ROLE_SLOTS[self.turns]

    def _shaded_triangles(self):
        """Per row y, the n black triangles whose lower vertices lie in row y.

        Each entry: (black index, role slots, [(position, mu_exp, lam_exp)] for
        ll, lr, top).  Their tops run through row y + 1, or through the eta
        translate of row 0 for the last row.
        """
        out = []
        for y in range(self.m):
            row = []
            for k in range(self.n):
                top = self.base + np.array([self.starts[y + 1] + k, y + 1])
                ll = top - (0, 1)
                b, slots = self.black_triangle(ll)
                locs = [self.locate(ll), self.locate(ll + (1, 0)), self.locate(top)]
                row.append((b, slots, locs))
            out.append(row)
        return out

    def crossing_tags(self):
        """Rows of (row, k, role, position, mu_exp, lam_exp) for the shaded triangles."""
        tags = []
        for y, row in enumerate(self.shaded):
            for k, (_, _, locs) in enumerate(row):
                for role, (pos, e_mu, e_lam) in zip(("ll", "lr", "top"), locs):
                    tags.append((y, k, role, pos, e_mu, e_lam))
        return tags


def fundamental_domain(torus, basis=None, base_vertex=(0, 0)):
    if basis is None:
        basis = adapted_basis(torus, 0)
    return FundamentalDomain(torus, basis, base_vertex)


# ---------------------------------------------------------------------------
# derived decompositions

_NEXT_ROLE = {"M": "M'", "M'": "M''", "M''": "M"}


@dataclass
class DerivedDecomposition:
    """A generation of the three-periodic sequence M, M', M''.

    ``vertex_parent[i]`` is the parent black face behind new vertex i,
    ``black_parent`` the parent white face behind each new black face and
    ``white_parent`` the parent vertex behind each new white face.
    """

    role: str
    triangulation: BicoloredTriangulation
    vertex_parent: np.ndarray
    black_parent: np.ndarray
    white_parent: np.ndarray


def derive(surface):
    """Next generation: vertices <- black faces, black <- white, white <- vertices."""
    if isinstance(surface, RegularTorus):
        tri, role = surface.triangulation(), "M"
    elif isinstance(surface, DerivedDecomposition):
        tri, role = surface.triangulation, surface.role
    else:
        tri, role = surface, "M"
    new = derive_triangulation(tri)
    return DerivedDecomposition(
        role=_NEXT_ROLE[role],
        triangulation=new,
        vertex_parent=np.arange(len(tri.black)),
        black_parent=np.arange(len(tri.white)),
        white_parent=np.arange(tri.n_vertices),
    )


def derived_torus_maps(torus):
    """Identification of M' with the torus itself.

    Black triangle b of M (a vertex of M') sits at the lattice point of its
    lower left corner, so M' is the same lattice quotient.  The black faces
    of M' are the white triangles of M with the same index; the white face
    of M' around vertex v of M is the downward triangle labelled v - (1, 1).
    Returns ``white_face_of_vertex`` for that last correspondence.
    """
    p = torus.vertex_coords
    return torus.index(p - (1, 1))
