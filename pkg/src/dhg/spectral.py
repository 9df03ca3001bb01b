"""Spectral curves of quaternionic holomorphic line bundles over tori.

All operators are complexified with :func:`dhg.quatlin.complexify`; a
section over the fundamental domain is a complex vector holding the pairs
``(z1, z2)`` of its quaternion values in domain order.  Multipliers act by
right multiplication, which is scalar in these coordinates.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyKernel, InterpolationIllConditioned, SingularAtTriangle
from .mesh import FundamentalDomain, _LL_OFFSET, adapted_basis, rotate
from .quatlin import (
    as_quat, c_to_qvec, complexify, qinv, qmul, qnorm, qvec_to_c, right_j_c,
)

RANK_TOL = 1e-9
KERNEL_TOL = 1e-8
GENERICITY_TOL = 1e-8


# ---------------------------------------------------------------------------
# polynomial data

@dataclass
class SpectralData:
    """Bivariate polynomial ``P(s, t) = det(t Id - H(s))``.

    ``coeffs[j, k]`` multiplies ``s^j t^k``.  For tori ``s = mu`` and
    ``t = lambda``; for polygons ``s = lambda`` and ``t = mu``.
    """

    coeffs: np.ndarray
    base: str = "mu"
    fiber: str = "lambda"
    holonomies: list = field(default_factory=list)
    generic: bool = None
    samples: list = field(default_factory=list)
    nodes: int = 0

    def __call__(self, s, t):
        return evaluate_poly(self.coeffs, s, t)

    def scale(self, s, t):
        j = np.arange(self.coeffs.shape[0])[:, None]
        k = np.arange(self.coeffs.shape[1])[None, :]
        return float(np.sum(np.abs(self.coeffs) * np.abs(s) ** j * np.abs(t) ** k))

    def relative_value(self, s, t):
        sc = self.scale(s, t)
        return abs(self(s, t)) / sc if sc > 0 else 0.0

    def contains(self, s, t, tol=1e-8):
        return self.relative_value(s, t) < tol

    def fiber_roots(self, s):
        """Roots t of P(s, .) counted with multiplicity."""
        poly = np.array([evaluate_poly(self.coeffs[:, [k]], s, 1.0)
                         for k in range(self.coeffs.shape[1])])
        nz = np.flatnonzero(np.abs(poly) > 0)
        poly = poly[: nz[-1] + 1]
        return np.roots(poly[::-1])

    def base_polynomial(self, t):
        """Coefficients (ascending) of P(., t)."""
        k = np.arange(self.coeffs.shape[1])
        return self.coeffs @ (t ** k)

    def normalized(self):
        """Coefficients divided by the entry of largest modulus (ties to the first)."""
        flat = self.coeffs.reshape(-1)
        idx = int(np.argmax(np.abs(flat)))
        return self.coeffs / flat[idx]

    def rho_defect(self):
        """max |Im c| / max |c|; zero iff P(conj s, conj t) = conj P(s, t)."""
        return float(np.max(np.abs(self.coeffs.imag)) / np.max(np.abs(self.coeffs)))

    def to_json(self):
        return {
            "base": self.base, "fiber": self.fiber,
            "coeffs_real": self.coeffs.real.tolist(),
            "coeffs_imag": self.coeffs.imag.tolist(),
        }


def evaluate_poly(coeffs, s, t):
    """sum_jk c[j, k] s^j t^k by nested Horner."""
    out = 0j
    for j in range(coeffs.shape[0] - 1, -1, -1):
        row = 0j
        for k in range(coeffs.shape[1] - 1, -1, -1):
            row = row * t + coeffs[j, k]
        out = out * s + row
    return out


def eval_matrix_poly(mats, s):
    """sum_k s^k mats[k] by Horner."""
    out = mats[-1].copy()
    for k in range(len(mats) - 2, -1, -1):
        out = out * s + mats[k]
    return out


def matrix_poly_mul(left, right):
    """Coefficients of the product of two matrix polynomials (left @ right)."""
    out = np.zeros((len(left) + len(right) - 1,) + (left.shape[1], right.shape[2]),
                   dtype=complex)
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            out[i + j] += a @ b
    return out


def char_poly_from_matrix_poly(mats, base="mu", fiber="lambda", rng=None,
                               tol=1e-8, max_doublings=4, degree=None):
    """det(t Id - H(s)) for a matrix polynomial H by evaluation and interpolation.

    H is evaluated at roots of unity; the characteristic coefficients at
    each node are recovered from the eigenvalues and interpolated per power
    of t with an FFT.  The interpolant is validated against direct
    determinants at random probes; failures double the node count.

    ``degree`` is a proven bound on the degree in s.  The node count always
    covers the generic bound ``size * deg H``; coefficients beyond
    ``degree`` must come out negligible and are then dropped.
    """
    mats = np.asarray(mats, dtype=complex)
    size = mats.shape[1]
    generic = size * (len(mats) - 1)
    degree = generic if degree is None else min(degree, generic)
    rng = np.random.default_rng(12345) if rng is None else rng
    nodes = generic + 1
    for _ in range(max_doublings + 1):
        roots = np.exp(2j * np.pi * np.arange(nodes) / nodes)
        values = np.empty((nodes, size + 1), dtype=complex)
        for k, s in enumerate(roots):
            values[k] = np.poly(np.linalg.eigvals(eval_matrix_poly(mats, s)))[::-1]
        coeffs = np.fft.fft(values, axis=0) / nodes
        tail = coeffs[degree + 1:]
        coeffs = coeffs[: degree + 1]
        ok = True
        if len(tail) and np.max(np.abs(tail)) > tol * np.max(np.abs(coeffs)):
            ok = False
        data = SpectralData(coeffs, base=base, fiber=fiber, nodes=nodes)
        for _ in range(8):
            s = rng.uniform(0.5, 1.5) * np.exp(2j * np.pi * rng.uniform())
            h = eval_matrix_poly(mats, s)
            t = np.max(np.abs(np.linalg.eigvals(h))) * rng.uniform(0.2, 1.2) \
                * np.exp(2j * np.pi * rng.uniform()) + 1e-3
            direct = np.linalg.det(t * np.eye(size) - h)
            if abs(data(s, t) - direct) > tol * max(data.scale(s, t), 1e-300):
                ok = False
                break
        if ok:
            return data
        nodes = 2 * nodes
    raise InterpolationIllConditioned("interpolated characteristic polynomial "
                                      "disagrees with direct determinants", nodes=nodes)


def multiply_poly2(a, b):
    """Product of two bivariate coefficient matrices."""
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=complex)
    for j in range(a.shape[0]):
        for k in range(a.shape[1]):
            out[j:j + b.shape[0], k:k + b.shape[1]] += a[j, k] * b
    return out


# ---------------------------------------------------------------------------
# operators over a fundamental domain

def _role_coeffs(hs, black, slots):
    """Coefficients of a black triangle in the rotated roles (ll, lr, top)."""
    return [hs.coeffs[black, slots[r]] for r in range(3)]


def transfer_row_coeffs(hs, fd, row):
    """(A, B) with T_row(mu) = A + mu B, complex (2n, 2n)."""
    n = fd.n
    a = np.zeros((2 * n, 2 * n), dtype=complex)
    b = np.zeros_like(a)
    for k, (tri, slots, locs) in enumerate(fd.shaded[row]):
        c_ll, c_lr, c_top = _role_coeffs(hs, tri, slots)
        inv_top = qinv(c_top)
        for coeff, (pos, e_mu, e_lam) in ((c_ll, locs[0]), (c_lr, locs[1])):
            block = -complexify(qmul(inv_top, coeff))
            col = pos - row * n
            target = a if e_mu == 0 else b
            if e_mu not in (0, 1) or e_lam != 0:  # pragma: no cover - guaranteed by layout
                raise ValueError("unexpected wrap in transfer operator")
            target[2 * k:2 * k + 2, 2 * col:2 * col + 2] += block
    return a, b


def transfer_row(hs, fd, row, mu):
    a, b = transfer_row_coeffs(hs, fd, row)
    return a + mu * b


def degree_bound(factors, tol=1e-12):
    """Bound on the s-degree of det(t - prod(A_k + s B_k)): the sum of the ranks of B_k.

    Every minor of A + s B has degree at most rank B, and minors of a
    product expand into products of minors of the factors.
    """
    total = 0
    for b in factors:
        sv = np.linalg.svd(b, compute_uv=False)
        total += int(np.sum(sv > tol * max(sv[0], 1e-300))) if sv[0] > 0 else 0
    return total


def holonomy_poly(hs, fd):
    """Matrix coefficients of H(mu) = T_{m-1}(mu) ... T_0(mu), shape (m+1, 2n, 2n)."""
    n = fd.n
    mats = np.eye(2 * n, dtype=complex)[None]
    for row in range(fd.m):
        a, b = transfer_row_coeffs(hs, fd, row)
        mats = matrix_poly_mul(np.stack([a, b]), mats)
    return mats


def holonomy_H(hs, fd, mu):
    return eval_matrix_poly(holonomy_poly(hs, fd), mu)


def _power(z, e):
    if e == 0:
        return 1.0 + 0j
    return complex(z) ** e


def assemble_D(hs, fd, mu, lam):
    """Complex (2|B|, 2|V|) matrix of the forms on sections with multiplier (mu, lam).

    Row pairs follow the shaded triangles row by row; column pairs follow
    the fundamental domain order.
    """
    n_tri = fd.m * fd.n
    out = np.zeros((2 * n_tri, 2 * n_tri), dtype=complex)
    r = 0
    for row in fd.shaded:
        for tri, slots, locs in row:
            for coeff, (pos, e_mu, e_lam) in zip(_role_coeffs(hs, tri, slots), locs):
                factor = _power(mu, e_mu) * _power(lam, e_lam)
                out[2 * r:2 * r + 2, 2 * pos:2 * pos + 2] += complexify(coeff) * factor
            r += 1
    return out


def kernel_dimension(mat, tol=RANK_TOL):
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0:
        return mat.shape[1]
    return int(mat.shape[1] - np.sum(s > tol * s[0]))


# ---------------------------------------------------------------------------
# sections with monodromy

@dataclass
class MonodromySection:
    """Complex values on a fundamental domain with multiplier (mu, lam)."""

    fd: FundamentalDomain
    values: np.ndarray  # (2 |V|,) complex, domain order
    mu: complex
    lam: complex

    @property
    def quaternions(self):
        return c_to_qvec(self.values)

    def value_at(self, points):
        """Quaternion values at original lattice points (..., 2) of the universal cover."""
        pts = np.asarray(points, dtype=np.int64)
        flat = pts.reshape(-1, 2)
        q = self.quaternions
        out = np.empty((len(flat), 4))
        for i, p in enumerate(flat):
            pos, e_mu, e_lam = self.fd.locate(rotate(p, -self.fd.turns))
            factor = _power(self.mu, e_mu) * _power(self.lam, e_lam)
            out[i] = qmul(q[pos], as_quat(factor))
        return out.reshape(pts.shape[:-1] + (4,))

    def times_j(self):
        """The section psi j, which has the conjugate multiplier."""
        return MonodromySection(self.fd, right_j_c(self.values),
                                np.conj(self.mu), np.conj(self.lam))


def black_lifts(fd):
    """Original lattice points (B, 3, 2) of one lift of every black triangle.

    Vertices are listed in the torus slot order (ll, lr, top); the lifts
    are the shaded triangles of the fundamental domain.
    """
    torus = fd.torus
    out = np.zeros((torus.n_black, 3, 2), dtype=np.int64)
    off = np.asarray(_LL_OFFSET[fd.turns])
    for y in range(fd.m):
        for k in range(fd.n):
            top = fd.base + np.array([fd.starts[y + 1] + k, y + 1])
            ll_rot = top - (0, 1)
            q = rotate(ll_rot, fd.turns) + off
            tri = fd.shaded[y][k][0]
            out[tri] = [q, q + (1, 0), q + (0, 1)]
    return out


def eigen_section(hs, fd, mu, lam, tol=KERNEL_TOL):
    """Unit kernel vector of D(mu, lam) with its largest entry real positive."""
    d = assemble_D(hs, fd, mu, lam)
    _, s, vh = np.linalg.svd(d)
    if s[-1] > tol * s[0]:
        raise EmptyKernel("multiplier is not in the spectrum",
                          smallest_singular_value=float(s[-1] / s[0]))
    v = vh[-1].conj()
    k = int(np.argmax(np.abs(v)))
    v = v * (abs(v[k]) / v[k])
    return MonodromySection(fd, v / np.linalg.norm(v), complex(mu), complex(lam))


def prolongation_values(x, points_x, values):
    """psi_hat = (a, b) on triangles from vertex data, plus the third-vertex residual.

    ``points_x`` (..., 3, 4) are the chart coordinates and ``values`` (..., 3, 4)
    the section values at the three vertices.
    """
    xp, xq, xr = points_x[..., 0, :], points_x[..., 1, :], points_x[..., 2, :]
    yp, yq, yr = values[..., 0, :], values[..., 1, :], values[..., 2, :]
    b = qmul(qinv(xq - xp), yp - yq)
    a = yp + qmul(xp, b)
    resid = qnorm(a - qmul(xr, b) - yr)
    scale = np.maximum(np.max(qnorm(values), axis=-1), 1e-300)
    return np.stack([a, b], axis=-2), resid / scale


def F_hat(hs, fd, section, blacks=None):
    """Prolongations of a section with monodromy as complex 4-vectors.

    Returns one row per requested black triangle (all by default).  A
    triangle on which the section vanishes identically raises
    :class:`SingularAtTriangle`.
    """
    blacks = np.arange(fd.torus.n_black) if blacks is None else np.asarray(blacks)
    lifts = black_lifts(fd)[blacks]
    vals = section.value_at(lifts)
    size = np.max(qnorm(vals), axis=-1)
    scale = float(np.max(qnorm(section.quaternions)))
    dead = blacks[size <= 1e-12 * scale]
    if len(dead):
        raise SingularAtTriangle("section vanishes on a black triangle",
                                 triangles=dead.tolist())
    hat, _ = prolongation_values(hs.x, hs.x[fd.torus.black[blacks]], vals)
    return qvec_to_c(hat)


# ---------------------------------------------------------------------------
# horizontal holonomies and genericity

def row_holonomy(hs, fd, row):
    """Quaternionic holonomy of psi_{x+1} = -c_lr^-1 c_ll psi_x around a row."""
    hol = np.array([1.0, 0, 0, 0])
    for tri, slots, _ in fd.shaded[row]:
        c_ll, c_lr, _ = _role_coeffs(hs, tri, slots)
        hol = qmul(-qmul(qinv(c_lr), c_ll), hol)
    return hol


def horizontal_holonomies(hs, fd, row):
    """Eigenvalue pair {mu_i, conj mu_i} of the complexified row holonomy."""
    ev = np.linalg.eigvals(complexify(row_holonomy(hs, fd, row)))
    return sorted(ev, key=lambda z: (z.imag < 0, z.real))


def all_horizontal_holonomies(hs, fd):
    return [z for row in range(fd.m) for z in horizontal_holonomies(hs, fd, row)]


def _distinct(values, tol):
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            a, b = values[i], values[j]
            if abs(a - b) <= tol * max(abs(a), abs(b), 1e-300):
                return (i, j)
    return None


def genericity_check(hs, torus, tol=GENERICITY_TOL):
    """Horizontal holonomies for the three normalized adapted bases.

    Generic when, for every direction, the 2m values are mutually distinct.
    """
    report = {"directions": [], "generic": True, "witness": None}
    n_ends = 0
    for d in range(3):
        basis = adapted_basis(torus, d)
        fd = FundamentalDomain(torus, basis)
        hol = all_horizontal_holonomies(hs, fd)
        n_ends += len(hol)
        clash = _distinct(hol, tol)
        if clash is not None and report["generic"]:
            report["generic"] = False
            report["witness"] = {"direction": d, "pair": list(clash),
                                 "values": [complex(hol[clash[0]]), complex(hol[clash[1]])]}
        report["directions"].append({
            "direction": d, "gamma": list(basis.gamma), "eta": list(basis.eta),
            "length": fd.n, "thickness": fd.m, "holonomies": hol,
        })
    report["n_ends"] = n_ends
    return report


# ---------------------------------------------------------------------------
# splitting for data in CP^1

def splitting_blocks(mats, tol=1e-12):
    """Blocks of a matrix polynomial preserving the z1 and z2 coordinates, or None."""
    mats = np.asarray(mats)
    scale = np.max(np.abs(mats))
    z1 = np.arange(0, mats.shape[1], 2)
    z2 = z1 + 1
    off = max(np.max(np.abs(mats[:, z1][:, :, z2])), np.max(np.abs(mats[:, z2][:, :, z1])))
    if off > tol * scale:
        return None
    return mats[:, z1][:, :, z1], mats[:, z2][:, :, z2]


def split_char_poly(mats, base="mu", fiber="lambda", degree=None):
    """Factor det(t - H(s)) along the CP^1 block structure.

    Returns ``(splits, P1, P2)``; the factors are None when H mixes the
    blocks.
    """
    blocks = splitting_blocks(mats)
    if blocks is None:
        return False, None, None
    p1 = char_poly_from_matrix_poly(blocks[0], base, fiber, degree=degree)
    p2 = char_poly_from_matrix_poly(blocks[1], base, fiber, degree=degree)
    return True, p1, p2


# ---------------------------------------------------------------------------
# top level

def char_poly(hs, fd, rng=None):
    """Spectral data of the structure in the coordinates of the domain's basis."""
    wraps = [transfer_row_coeffs(hs, fd, row)[1] for row in range(fd.m)]
    data = char_poly_from_matrix_poly(holonomy_poly(hs, fd), rng=rng,
                                      degree=degree_bound(wraps))
    data.holonomies = all_horizontal_holonomies(hs, fd)
    data.generic = _distinct(data.holonomies, GENERICITY_TOL) is None
    return data


def sample_spectrum(data, n_samples=16, radius=1.0):
    """Points (mu, lambda) over a circle in the mu plane."""
    out = []
    for k in range(n_samples):
        mu = radius * np.exp(2j * np.pi * (k + 0.5) / n_samples)
        for lam in sorted(data.fiber_roots(mu), key=lambda z: (abs(z), np.angle(z))):
            out.append((complex(mu), complex(lam)))
    return out


def spectrum_points(hs, fd, rng, count, min_gap=1e-3):
    """Random points of the spectrum with simple fiber eigenvalue away from zero."""
    mats = holonomy_poly(hs, fd)
    pts = []
    while len(pts) < count:
        mu = rng.uniform(0.6, 1.6) * np.exp(2j * np.pi * rng.uniform())
        ev = np.linalg.eigvals(eval_matrix_poly(mats, mu))
        k = int(rng.integers(len(ev)))
        lam = ev[k]
        gaps = np.abs(np.delete(ev, k) - lam)
        if abs(lam) > min_gap and np.min(gaps) > min_gap * max(1.0, abs(lam)):
            pts.append((complex(mu), complex(lam)))
    return pts
