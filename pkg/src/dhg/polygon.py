"""Discrete curves and closed polygons in S^4 = HP^1.

The Darboux step with spectral parameter lambda acts on homogeneous lifts
in C^4 = (H^2, i): ``eta_+ = P eta + (Q eta) lambda`` where P projects onto
the line gamma along gamma_+ and Q = Id - P.  A closed polygon of period
n has the holonomy ``H(lambda) = (P_{n-1} + lambda Q_{n-1}) ... (P_0 + lambda Q_0)``
whose eigenlines seed closed Darboux transforms.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSplitting, EigenlineDegenerate, NotAPolygon
from .holo import Immersion
from .mesh import thin_torus
from .quatlin import (
    INVERTIBILITY_TOL, affine_chart, c_to_qvec, complexify, conj_invariants,
    cross_ratio4_array, hpoint_distance, hpoint_normalize, qmat_vec, qmul,
    splitting_projections, as_quat,
)
from .spectral import (
    char_poly_from_matrix_poly, degree_bound, eval_matrix_poly, splitting_blocks,
)

SIMPLE_TOL = 1e-8


@dataclass
class DiscreteCurve:
    """Homogeneous points ``(N, 2, 4)``; closed curves have period N."""

    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        self.points = hpoint_normalize(np.asarray(self.points, dtype=float))

    @classmethod
    def from_affine(cls, x, closed=True):
        return cls(Immersion.from_affine(as_quat(x)).points, closed)

    @property
    def n(self):
        return len(self.points)

    def _gaps(self, step):
        pts = self.points
        if self.closed:
            other = np.roll(pts, -step, axis=0)
            return hpoint_distance(pts, other)
        return hpoint_distance(pts[:-step], pts[step:])

    def is_immersed(self, tol=INVERTIBILITY_TOL):
        return bool(np.all(self._gaps(1) > tol))

    def is_polygon(self, tol=INVERTIBILITY_TOL):
        return self.is_immersed(tol) and bool(np.all(self._gaps(2) > tol))

    def polygon_violations(self, tol=INVERTIBILITY_TOL):
        out = []
        for step in (1, 2):
            out.extend((int(k), int(k + step)) for k in np.flatnonzero(self._gaps(step) <= tol))
        return out


def _projections_c(a, b):
    p, q = splitting_projections(a, b)
    return complexify(p), complexify(q)


def curve_darboux_step(gamma, gamma_next, eta_hat, lam):
    """One step of the recursion on a complex 4-vector lift of eta."""
    p, q = _projections_c(gamma, gamma_next)
    eta_hat = np.asarray(eta_hat, dtype=complex)
    return p @ eta_hat + lam * (q @ eta_hat)


def curve_darboux_step_quat(gamma, gamma_next, eta_hat, lam):
    """Same step written with quaternionic projections: P eta + (Q eta) lambda."""
    p, q = splitting_projections(gamma, gamma_next)
    eta_hat = np.asarray(eta_hat, dtype=float)
    lam_q = as_quat(complex(lam))
    return qmat_vec(p, eta_hat) + qmul(qmat_vec(q, eta_hat), lam_q[None, :])


def curve_cross_ratio_check(gamma, gamma_next, eta, eta_next, lam):
    """Deviation of the conjugacy invariants of M4(gamma, eta_+, gamma_+, eta) from lambda."""
    pts = np.stack([hpoint_normalize(np.asarray(p, dtype=float))
                    for p in (gamma, eta_next, gamma_next, eta)])
    x, _ = affine_chart(pts)
    m = cross_ratio4_array(x[0], x[1], x[2], x[3])
    got = conj_invariants(m)
    want = conj_invariants(as_quat(complex(lam)))
    return float(np.max(np.abs(got - want)))


def holonomy_factors(points):
    """Per edge (P_k, Q_k) complexified, for a closed curve."""
    n = len(points)
    out = []
    for k in range(n):
        try:
            out.append(_projections_c(points[k], points[(k + 1) % n]))
        except DegenerateSplitting:
            raise DegenerateSplitting("consecutive points coincide", index=k) from None
    return out


def holonomy_poly(points):
    """Matrix coefficients (n+1, 4, 4) of H(lambda), last factor on the left."""
    mats = np.eye(4, dtype=complex)[None]
    for p, q in holonomy_factors(points):
        new = np.zeros((len(mats) + 1, 4, 4), dtype=complex)
        new[:-1] += np.einsum("ij,kjl->kil", p, mats)
        new[1:] += np.einsum("ij,kjl->kil", q, mats)
        mats = new
    return mats


def curve_holonomy(points, lam):
    return eval_matrix_poly(holonomy_poly(points), lam)


def h_zero(points):
    """H(0) = P_{n-1} ... P_0."""
    out = np.eye(4, dtype=complex)
    for p, _ in holonomy_factors(points):
        out = p @ out
    return out


def _spread_sets(n, size):
    """Index sets of the given size in 0..n-1 with no two consecutive entries."""
    if size == 0:
        yield ()
        return
    for first in range(n):
        for rest in _spread_sets(n - first - 2, size - 1):
            yield (first,) + tuple(first + 2 + r for r in rest)


def h_max_closed_form(points):
    """Leading coefficient of H(lambda) from products of projections.

    Since Q_{k+1} Q_k = 0, only words whose Q factors are never adjacent
    survive, and the top degree is ceil(n / 2).  For odd n the only such
    word is Q_{n-1} P_{n-2} Q_{n-3} ... P_1 Q_0; for even n all spread
    index sets of size n / 2 contribute.
    """
    fac = holonomy_factors(points)
    n = len(fac)
    total = np.zeros((4, 4), dtype=complex)
    for sel in _spread_sets(n, (n + 1) // 2):
        word = np.eye(4, dtype=complex)
        for k in range(n):
            word = fac[k][1 if k in sel else 0] @ word
        total += word
    return total


def h_max(points, tol=1e-12):
    """(degree, coefficient) of the highest nonvanishing power of H(lambda)."""
    mats = holonomy_poly(points)
    scale = np.max(np.abs(mats))
    for k in range(len(mats) - 1, -1, -1):
        if np.max(np.abs(mats[k])) > tol * scale:
            return k, mats[k]
    return 0, mats[0]  # pragma: no cover


def polygon_spectral(points):
    """det(mu Id - H(lambda)) with lambda as base and mu as fiber variable."""
    fac = holonomy_factors(points)
    data = char_poly_from_matrix_poly(holonomy_poly(points), base="lambda", fiber="mu",
                                      degree=degree_bound([q for _, q in fac]))
    return data


def simple_spectrum_report(points, rng, samples=8):
    """Whether H(lambda) has simple eigenvalues at random lambda.

    For data in CP^1 simplicity is judged inside each invariant block, the
    relevant notion for seeding transforms that stay in CP^1.
    """
    worst = np.inf
    for _ in range(samples):
        lam = rng.uniform(0.5, 1.5) * np.exp(2j * np.pi * rng.uniform())
        ev, _, groups = eigenlines(points, lam)
        scale = max(np.max(np.abs(ev)), 1e-300)
        gaps = np.abs(ev[:, None] - ev[None, :])
        gaps[groups[:, None] != groups[None, :]] = np.inf
        np.fill_diagonal(gaps, np.inf)
        worst = min(worst, float(np.min(gaps)) / scale)
    return {"simple": worst > SIMPLE_TOL, "min_relative_gap": worst}


# ---------------------------------------------------------------------------
# thin cylinders

def thin_cylinder_bridge(curve):
    """The polygon as an immersion of the thin torus with the same numbering."""
    if not isinstance(curve, DiscreteCurve):
        curve = DiscreteCurve(curve)
    if not curve.is_polygon():
        raise NotAPolygon("three consecutive points must be mutually distinct",
                          pairs=curve.polygon_violations())
    torus = thin_torus(curve.n)
    return torus, Immersion(curve.points)


def curve_from_thin_torus(f):
    """Inverse of :func:`thin_cylinder_bridge`: vertex k carries gamma_k."""
    return DiscreteCurve(f.points)


# ---------------------------------------------------------------------------
# closed Darboux transforms and flows

def _sorted_eig(mat):
    ev, vecs = np.linalg.eig(mat)
    order = sorted(range(len(ev)), key=lambda k: (round(abs(ev[k]), 12), np.angle(ev[k])))
    return ev[order], vecs[:, order]


def eigenlines(points, lam):
    """Eigenvalues, eigenvectors and the group each one is simple in.

    For data in CP^1 the holonomy preserves the z1 and z2 coordinates; the
    eigenlines are then taken inside each block (z1 first) so the
    transforms stay in CP^1, and simplicity is judged within the block.
    Otherwise eigenvalues are ordered by (|mu|, arg mu).
    """
    mats = holonomy_poly(points)
    blocks = splitting_blocks(mats)
    if blocks is None:
        ev, vecs = _sorted_eig(eval_matrix_poly(mats, lam))
        return ev, vecs, np.zeros(len(ev), dtype=int)
    evs, vecs, groups = [], [], []
    for g, (block, coords) in enumerate(zip(blocks, (slice(0, None, 2), slice(1, None, 2)))):
        e, v = _sorted_eig(eval_matrix_poly(block, lam))
        full = np.zeros((4, len(e)), dtype=complex)
        full[coords] = v
        evs.append(e)
        vecs.append(full)
        groups.extend([g] * len(e))
    return np.concatenate(evs), np.concatenate(vecs, axis=1), np.array(groups)


def closed_darboux_transform(points, lam, index=0, tol=SIMPLE_TOL):
    """Closed transform seeded by an eigenline; returns (points, lifts, mu)."""
    ev, vecs, groups = eigenlines(points, lam)
    mu = ev[index]
    same = (groups == groups[index]) & (np.arange(len(ev)) != index)
    if np.any(np.abs(ev[same] - mu) <= tol * max(np.max(np.abs(ev)), 1e-300)):
        raise EigenlineDegenerate("requested eigenvalue is not simple",
                                  index=index, eigenvalue=[mu.real, mu.imag])
    lifts = [vecs[:, index]]
    n = len(points)
    for k in range(n - 1):
        lifts.append(curve_darboux_step(points[k], points[k + 1], lifts[-1], lam))
    lifts = np.array(lifts)
    return hpoint_normalize(c_to_qvec(lifts)), lifts, complex(mu)


def polygon_flow(points, lam, steps, index=0):
    """Iterated closed Darboux transforms, each seeded by an eigenline of H(lambda)."""
    out = [hpoint_normalize(np.asarray(points, dtype=float))]
    for _ in range(steps):
        nxt, _, _ = closed_darboux_transform(out[-1], lam, index)
        out.append(nxt)
    return out


def closure_defect(points, lifts, lam):
    """Distance between eta_n (one more step) and eta_0."""
    last = curve_darboux_step(points[-1], points[0], lifts[-1], lam)
    return float(hpoint_distance(c_to_qvec(last), c_to_qvec(lifts[0])))


# ---------------------------------------------------------------------------
# output geometry

def project_to_r3(x, pole=(0.0, 0.0, 0.0, 1.0), radius=None):
    """Points of R^4 = H to R^3.

    Purely imaginary data keeps its (i, j, k) components.  Otherwise the
    perspective projection from ``radius * pole`` onto the orthogonal
    complement of the pole is used; on the sphere of that radius this is
    the stereographic projection.
    """
    x = np.asarray(x, dtype=float)
    if np.all(np.abs(x[..., 0]) <= 1e-14 * max(1.0, np.max(np.abs(x)))):
        return x[..., 1:]
    u = np.asarray(pole, dtype=float)
    u = u / np.linalg.norm(u)
    # Gram-Schmidt on the coordinate axes, skipping the one closest to the pole
    basis = []
    for k in sorted(np.argsort(np.abs(u), kind="stable")[:3].tolist()):
        e = np.eye(4)[k] - u[k] * u
        for b in basis:
            e = e - np.dot(b, e) * b
        basis.append(e / np.linalg.norm(e))
    basis = np.array(basis)
    r = 4.0 * max(1.0, float(np.max(np.linalg.norm(x, axis=-1)))) if radius is None else radius
    t = x @ u
    w = x @ basis.T
    return w / (1.0 - t / r)[..., None]


def bridge_spectral_comparison(points, rng=None):
    """Thin torus curve det(lambda - H(mu)) against the polygon curve det(mu - H(lambda)).

    On the thin torus mu is the monodromy along (n, 0) and lambda along
    (1, 1), the same parameters as for the polygon, so the coefficient
    arrays agree up to transposition.  Returns the largest difference
    after normalizing both by their largest coefficient.
    """
    from .holo import induced_structure
    from .mesh import fundamental_domain
    from .spectral import char_poly

    torus, f = thin_cylinder_bridge(points)
    tor = char_poly(induced_structure(torus, f), fundamental_domain(torus), rng)
    pol = polygon_spectral(points)
    a, b = tor.normalized(), pol.normalized().T
    shape = np.maximum(a.shape, b.shape)
    pad = lambda c: np.pad(c, [(0, shape[0] - c.shape[0]), (0, shape[1] - c.shape[1])])  # noqa: E731
    return float(np.max(np.abs(pad(a) - pad(b)))), tor, pol
