"""Darboux transforms of immersed discrete surfaces.

A holomorphic section of V/L prolongs to a section of the trivial bundle
H^2 over the black triangles; its projectivization is a Darboux transform
living on the derived decomposition M'.  The multi-ratio of the hexagon
around every white triangle is then -1.

Hexagon labels around a white triangle, read off oriented incidence:
``x1, x3, x2`` are its vertices in counterclockwise order starting at
vertex slot 0, and ``x_ij`` is the transform on the black triangle sharing
the edge ``v_i v_j``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ChiInconsistent, InconsistentSection, NonInvertibleDifference, RegularityViolation,
    TransformsCollide, ZeroProlongation,
)
from .quatlin import (
    affine_chart, as_quat, hermitian, hpoint_distance, hpoint_normalize, moebius_apply,
    multi_ratio6_array, qinv, qmat_inv, qmat_vec, qmul, qnorm,
)
from .spectral import MonodromySection, black_lifts, prolongation_values

CONSISTENCY_TOL = 1e-8
REGULARITY_TOL = 1e-9


@dataclass
class Prolongation:
    """Per black triangle values ``hat (B, 2, 4)`` in the chart of the structure."""

    hat: np.ndarray
    residual: float
    mu: complex = 1.0
    lam: complex = 1.0
    chart: np.ndarray = None

    def original(self):
        """The prolongation in the coordinates of the immersion (undoing the chart)."""
        if self.chart is None:
            return self.hat
        return moebius_apply(qmat_inv(self.chart), self.hat)


@dataclass
class DarbouxTransform:
    """Homogeneous values ``points (B, 2, 4)`` on the black triangles."""

    points: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = hpoint_normalize(np.asarray(self.points, dtype=float))

    def to_json(self):
        return [[p[0].tolist(), p[1].tolist()] for p in self.points]


def _black_values(section, hs):
    """Section values on the three vertices of every black triangle (B, 3, 4)."""
    if isinstance(section, MonodromySection):
        return section.value_at(black_lifts(section.fd))
    return as_quat(section)[hs.black]


def prolong(section, hs, tol=CONSISTENCY_TOL):
    """Prolongation of a holomorphic section (plain vertex values or with monodromy)."""
    vals = _black_values(section, hs)
    hat, resid = prolongation_values(hs.x, hs.x[hs.black], vals)
    worst = float(np.max(resid))
    if worst > tol:
        raise InconsistentSection("section is not holomorphic on some black triangle",
                                  triangles=np.flatnonzero(resid > tol).tolist(),
                                  residual=worst)
    mu = getattr(section, "mu", 1.0)
    lam = getattr(section, "lam", 1.0)
    return Prolongation(hat, worst, complex(mu), complex(lam), hs.chart)


def prolong_at(section, hs, torus, ll_points):
    """Prolongations at lifts of black triangles given by lower left lattice points (..., 2).

    The section is evaluated on the universal cover, so neighbouring lifts
    carry consistent monodromy factors.
    """
    ll = np.asarray(ll_points, dtype=np.int64)
    pts = np.stack([ll, ll + (1, 0), ll + (0, 1)], axis=-2)
    vals = section.value_at(pts)
    x = hs.x[torus.index(pts)]
    hat, resid = prolongation_values(x, x, vals)
    return hat, float(np.max(resid))


def regularity_violations(f_points, black, ft_points, tol=REGULARITY_TOL):
    out = []
    for slot in range(3):
        d = hpoint_distance(ft_points, f_points[black[:, slot]])
        out.extend((int(b), int(black[b, slot])) for b in np.flatnonzero(d <= tol))
    return sorted(out)


def darboux_from_section(p, f, black, tol=REGULARITY_TOL):
    """The transform L#_b = psi_hat_b H, checked for regularity."""
    norms = np.sqrt(np.sum(p.hat ** 2, axis=(-2, -1)))
    scale = float(np.max(norms))
    zero = np.flatnonzero(norms <= 1e-12 * max(scale, 1e-300))
    if len(zero) or scale == 0:
        raise ZeroProlongation("prolongation vanishes on black triangles",
                               triangles=zero.tolist())
    ft = DarbouxTransform(p.original(), {"mu": p.mu, "lambda": p.lam})
    bad = regularity_violations(f.points, np.asarray(black), ft.points, tol)
    if bad:
        raise RegularityViolation("transform meets the immersion on a black triangle",
                                  pairs=bad[:50])
    return ft


# ---------------------------------------------------------------------------
# hexagons and checks

def hexagon_indices(tri):
    """Per white face: (v1, b12, v2, b23, v3, b13) as vertex / black-face indices."""
    w = tri.white
    adj = tri.white_adj[:, :, 0]
    return np.stack([w[:, 0], adj[:, 2], w[:, 2], adj[:, 1], w[:, 1], adj[:, 0]], axis=-1)


def _common_chart(*point_sets):
    allp = np.concatenate(point_sets)
    coords, _ = affine_chart(allp)
    out, start = [], 0
    for p in point_sets:
        out.append(coords[start:start + len(p)])
        start += len(p)
    return out


def hexagon_points(tri, f_points, ft_points):
    """Affine hexagon coordinates (W, 6, 4) in one common chart."""
    xv, xb = _common_chart(f_points, ft_points)
    h = hexagon_indices(tri)
    return np.stack([xv[h[:, 0]], xb[h[:, 1]], xv[h[:, 2]], xb[h[:, 3]],
                     xv[h[:, 4]], xb[h[:, 5]]], axis=1)


def multiratio_deviations(tri, f_points, ft_points):
    hexa = hexagon_points(tri, f_points, ft_points)
    out = np.empty(len(hexa))
    for w, pts in enumerate(hexa):
        try:
            m = multi_ratio6_array(*pts)
        except NonInvertibleDifference as exc:
            raise NonInvertibleDifference(str(exc), white_triangle=w) from None
        out[w] = float(qnorm(m + np.array([1.0, 0, 0, 0])))
    return out


def verify_multiratio(tri, f_points, ft_points):
    """Report of max |M6 + 1| over the white faces of ``tri``."""
    dev = multiratio_deviations(tri, np.asarray(f_points), np.asarray(ft_points))
    worst = int(np.argmax(dev))
    return {"max_multiratio_dev": float(dev[worst]), "worst_white_triangle": worst,
            "regularity_violations": regularity_violations(
                hpoint_normalize(f_points), tri.black, hpoint_normalize(ft_points))}


def holonomy_formula(hexa):
    """(x13-x1)^-1 (x12-x1)(x12-x2)^-1 (x23-x2)(x23-x3)^-1 (x13-x3) on (..., 6, 4)."""
    x1, x12, x2, x23, x3, x13 = (hexa[..., k, :] for k in range(6))
    out = qmul(qinv(x13 - x1), x12 - x1)
    out = qmul(out, qinv(x12 - x2))
    out = qmul(out, x23 - x2)
    out = qmul(out, qinv(x23 - x3))
    return qmul(out, x13 - x3)


def transport(u, target, through):
    """P: the unique w in target H with w = u mod through H (homogeneous (2, 4) inputs)."""
    frame = np.stack([target, -through], axis=1)  # columns
    coeffs = qmat_vec(qmat_inv(frame), u)
    return qmul(target, coeffs[0][None, :])


def connection_holonomy(tri, f_points, ft_points, w):
    """Scale of the holonomy P_{13,12} P_{12,23} P_{23,13} on L# around white face w.

    Computed by composing the projections of the connection in the affine
    representatives (x, 1).
    """
    hexa = hexagon_points(tri, f_points, ft_points)[w]
    lift = lambda x: np.stack([x, np.array([1.0, 0, 0, 0])])  # noqa: E731
    v1, b12, v2, b23, v3, b13 = (lift(hexa[k]) for k in range(6))
    u = transport(b13, b23, v3)
    u = transport(u, b12, v2)
    u = transport(u, b13, v1)
    start = b13
    return qmul(qinv(hermitian(start, start)), hermitian(start, u))


def connection_holonomies(tri, f_points, ft_points):
    return np.stack([connection_holonomy(tri, f_points, ft_points, w)
                     for w in range(len(tri.white))])


def vertex_face_holonomy(tri, f_points, ft_points, v):
    """Holonomy around the face of M' belonging to vertex v (always the identity)."""
    blacks, _ = tri.black_cycle_around(v)
    lv = hpoint_normalize(f_points[v])
    ft = hpoint_normalize(ft_points)
    start = ft[blacks[0]]
    u = start
    for b in blacks[1:] + blacks[:1]:
        u = transport(u, ft[b], lv)
    return qmul(qinv(hermitian(start, start)), hermitian(start, u))


# ---------------------------------------------------------------------------
# Bianchi permutability

def solve_chi(u, r):
    """chi with r = u chi for quaternionic 2-vectors, plus the relative residual."""
    chi = qmul(qinv(hermitian(u, u)), hermitian(u, r))
    res = np.sqrt(np.sum((r - qmul(u, chi[..., None, :])) ** 2, axis=(-2, -1)))
    scale = np.maximum(np.sqrt(np.sum(r ** 2, axis=(-2, -1))), 1e-300)
    return chi, res / scale


@dataclass
class BianchiResult:
    points: np.ndarray   # (W, 2, 4) homogeneous values of the common transform
    phi_hat: np.ndarray  # (W, 2, 4) in the chart of the structure
    chi: np.ndarray      # (W, 4)
    chi_consistency: float
    report: dict


def bianchi(torus, hs, sec_sharp, sec_flat, tol=CONSISTENCY_TOL):
    """Common Darboux transform of two transforms given by sections with monodromy.

    Per white triangle w(i, j) the three adjacent black triangles are taken
    with consistent lifts b1 = b(i, j), b2 = b(i, j+1), b3 = b(i+1, j).
    """
    pos = torus.vertex_coords
    lls = np.stack([pos, pos + (0, 1), pos + (1, 0)], axis=1)  # (W, 3, 2)
    sharp, r1 = prolong_at(sec_sharp, hs, torus, lls)
    flat, r2 = prolong_at(sec_flat, hs, torus, lls)
    if max(r1, r2) > tol:
        raise InconsistentSection("input sections are not holomorphic",
                                  residual=max(r1, r2))
    d = hpoint_distance(sharp, flat)
    if np.any(d <= REGULARITY_TOL):
        bad = np.argwhere(d <= REGULARITY_TOL)
        raise TransformsCollide("the two transforms agree on black triangles",
                                white_and_slot=bad.tolist()[:50])
    chis = []
    residuals = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        u = sharp[:, j] - sharp[:, i]
        r = flat[:, i] - flat[:, j]
        chi, res = solve_chi(u, r)
        chis.append(chi)
        residuals.append(res)
    scale = np.maximum(qnorm(chis[0]), 1e-300)
    spread = max(float(np.max(qnorm(chis[1] - chis[0]) / scale)),
                 float(np.max(qnorm(chis[2] - chis[0]) / scale)))
    consistency = max(spread, float(np.max(residuals)))
    if consistency > tol:
        raise ChiInconsistent("pairwise chi values disagree", deviation=consistency)
    chi = chis[0]
    phi = flat[:, 0] + qmul(sharp[:, 0], chi[:, None, :])
    points = moebius_apply(qmat_inv(hs.chart), phi) if hs.chart is not None else phi
    report = {"chi_consistency": consistency,
              "min_chi_norm_ratio": float(np.min(qnorm(chi)) / np.max(qnorm(chi)))}
    return BianchiResult(hpoint_normalize(points), phi, chi, consistency, report)


# ---------------------------------------------------------------------------
# Z^3 lattice

HEXAGON_OFFSETS = ((1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 1, 1), (0, 0, 1), (1, 0, 1))


def ds_cube_check(x):
    """max |M6(x1, x12, x2, x23, x3, x13) + 1| over cubes of a partial Z^3 field.

    ``x`` maps integer triples to quaternions (4,); cubes whose hexagon is
    not fully present are skipped.  Returns ``(max deviation, cubes checked)``.
    """
    keys = list(x.keys())
    if not keys:
        return 0.0, 0
    arr = np.array(keys)
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    worst, count = 0.0, 0
    for a in range(lo[0] - 1, hi[0] + 1):
        for b in range(lo[1] - 1, hi[1] + 1):
            for c in range(lo[2] - 1, hi[2] + 1):
                hexa = [(a + o[0], b + o[1], c + o[2]) for o in HEXAGON_OFFSETS]
                if not all(h in x for h in hexa):
                    continue
                try:
                    m = multi_ratio6_array(*[x[h] for h in hexa])
                except NonInvertibleDifference as exc:
                    raise NonInvertibleDifference(str(exc), cube=[a, b, c]) from None
                worst = max(worst, float(qnorm(m + np.array([1.0, 0, 0, 0]))))
                count += 1
    return worst, count


def assemble_z3(torus, levels, box):
    """Z^3 field from three generations of maps on a regular torus.

    ``levels`` holds homogeneous values on vertices, black triangles and
    white triangles.  The point (a, b, c) at height h = a + b + c in {0, 1, 2}
    sits over lattice position (-c, -b) of generation h.  All values are
    put into one common affine chart.
    """
    coords = _common_chart(*[np.asarray(lv) for lv in levels])
    field_ = {}
    for a in range(box[0][0], box[0][1] + 1):
        for b in range(box[1][0], box[1][1] + 1):
            for c in range(box[2][0], box[2][1] + 1):
                h = a + b + c
                if h not in (0, 1, 2):
                    continue
                idx = int(torus.index(np.array([-c, -b])))
                field_[(a, b, c)] = coords[h][idx]
    return field_
