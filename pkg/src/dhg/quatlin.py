"""Quaternion arithmetic, complexification and Moebius-geometric ratios.

Quaternions are stored as float arrays whose last axis holds the real
components ``(a, b, c, d)`` of ``a + b i + c j + d k``.  The light classes
:class:`Quaternion`, :class:`QVec2`, :class:`HPoint` and :class:`CPoint3`
wrap such arrays for the public API; the array functions are what the rest
of the package uses internally.

Complexification convention: ``q = z1 + j z2`` with ``z1 = a + b i`` and
``z2 = c - d i``.  The complex structure on ``H^n`` is right multiplication
by ``i``, which acts diagonally in these coordinates.  A quaternionic vector
``(q_0, ..., q_{n-1})`` becomes ``(z1(q_0), z2(q_0), z1(q_1), ...)``.
"""

import numpy as np

from .errors import DegenerateSplitting, NonInvertibleDifference

INVERTIBILITY_TOL = 1e-9


# ---------------------------------------------------------------------------
# array level arithmetic

def as_quat(x):
    """Coerce scalars, complex numbers, Quaternion objects or arrays to (..., 4)."""
    if isinstance(x, Quaternion):
        return x.q.copy()
    arr = np.asarray(x)
    if np.iscomplexobj(arr):
        out = np.zeros(arr.shape + (4,))
        out[..., 0] = arr.real
        out[..., 1] = arr.imag
        return out
    arr = arr.astype(float)
    if arr.ndim == 0:
        out = np.zeros(4)
        out[0] = arr
        return out
    if arr.shape[-1] != 4:
        raise ValueError("quaternion arrays need a trailing axis of length 4")
    return arr


def qmul(p, q):
    """Hamilton product with ij = k, broadcasting over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a1, b1, c1, d1 = np.moveaxis(p, -1, 0)
    a2, b2, c2, d2 = np.moveaxis(q, -1, 0)
    return np.stack([
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ], axis=-1)


def qconj(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qnorm2(q):
    return np.sum(np.asarray(q, dtype=float) ** 2, axis=-1)


def qnorm(q):
    return np.sqrt(qnorm2(q))


def qinv(q):
    q = np.asarray(q, dtype=float)
    return qconj(q) / qnorm2(q)[..., None]


def qreal(x):
    out = np.zeros(np.shape(x) + (4,))
    out[..., 0] = x
    return out


def conj_invariants(q):
    """The pair (real part, norm), a complete invariant of the conjugacy class."""
    q = np.asarray(q, dtype=float)
    return np.stack([q[..., 0], qnorm(q)], axis=-1)


def to_complex_pair(q):
    q = np.asarray(q, dtype=float)
    return q[..., 0] + 1j * q[..., 1], q[..., 2] - 1j * q[..., 3]


def from_complex_pair(z1, z2):
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    return np.stack([z1.real, z1.imag, z2.real, -z2.imag], axis=-1)


def qvec_to_c(v):
    """(..., n, 4) quaternion vectors to (..., 2n) complex vectors."""
    z1, z2 = to_complex_pair(v)
    out = np.stack([z1, z2], axis=-1)
    return out.reshape(out.shape[:-2] + (-1,))


def c_to_qvec(c):
    """Inverse of :func:`qvec_to_c`."""
    c = np.asarray(c, dtype=complex)
    pairs = c.reshape(c.shape[:-1] + (-1, 2))
    return from_complex_pair(pairs[..., 0], pairs[..., 1])


def complexify(m):
    """Complex matrix of left multiplication by a quaternion or quaternionic matrix.

    ``m`` is a single quaternion ``(4,)`` or a matrix ``(n, k, 4)``; the result
    is ``(2, 2)`` or ``(2n, 2k)`` with blocks ``[[w1, -conj w2], [w2, conj w1]]``.
    """
    m = np.asarray(m, dtype=float)
    single = m.ndim == 1
    if single:
        m = m[None, None, :]
    w1, w2 = to_complex_pair(m)
    n, k = m.shape[:2]
    out = np.empty((n, 2, k, 2), dtype=complex)
    out[:, 0, :, 0] = w1
    out[:, 0, :, 1] = -np.conj(w2)
    out[:, 1, :, 0] = w2
    out[:, 1, :, 1] = np.conj(w1)
    return out.reshape(2 * n, 2 * k)


def decomplexify(c):
    """Quaternionic matrix ``(n, k, 4)`` of a complexified left multiplication."""
    c = np.asarray(c, dtype=complex)
    n, k = c.shape[0] // 2, c.shape[1] // 2
    blocks = c.reshape(n, 2, k, 2)
    return from_complex_pair(blocks[:, 0, :, 0], blocks[:, 1, :, 0])


def right_j_c(v):
    """Right multiplication by j on complex coordinates: (z1, z2) -> (-conj z2, conj z1)."""
    v = np.asarray(v, dtype=complex)
    pairs = v.reshape(v.shape[:-1] + (-1, 2))
    out = np.stack([-np.conj(pairs[..., 1]), np.conj(pairs[..., 0])], axis=-1)
    return out.reshape(v.shape)


def qmat_mul(a, b):
    """Product of quaternionic matrices (n, k, 4) x (k, l, 4)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(qmul(a[:, :, None, :], b[None, :, :, :]), axis=1)


def qmat_vec(a, v):
    """Quaternionic matrix (n, k, 4) applied to a vector (k, 4)."""
    return np.sum(qmul(np.asarray(a, float), np.asarray(v, float)[None, :, :]), axis=1)


def qmat_inv(a):
    return decomplexify(np.linalg.inv(complexify(a)))


def qidentity(n):
    out = np.zeros((n, n, 4))
    out[np.arange(n), np.arange(n), 0] = 1.0
    return out


# ---------------------------------------------------------------------------
# ratios

def _ratio_chain(points):
    pts = [as_quat(p) for p in points]
    scale = max(float(np.max(qnorm(p))) for p in pts)
    k = len(pts)
    diffs = [pts[i] - pts[(i + 1) % k] for i in range(k)]
    for i, d in enumerate(diffs):
        if np.any(qnorm(d) <= INVERTIBILITY_TOL * scale) or scale == 0.0:
            raise NonInvertibleDifference(
                f"difference x{i + 1} - x{(i + 1) % k + 1} is not invertible",
                position=i)
    out = diffs[0]
    for i in range(1, k):
        step = qinv(diffs[i]) if i % 2 else diffs[i]
        out = qmul(out, step)
    return out


def multi_ratio6_array(x1, x2, x3, x4, x5, x6):
    """Vectorised multi-ratio on stacked (..., 4) arrays."""
    return _ratio_chain([x1, x2, x3, x4, x5, x6])


def cross_ratio4_array(z1, z2, z3, z4):
    """Vectorised cross-ratio on stacked (..., 4) arrays.

    Only the three differences that get multiplied or inverted in a way
    that matters are required to be nonzero; ``z3 == z4`` gives 0.
    """
    pts = [as_quat(z) for z in (z1, z2, z3, z4)]
    scale = max(float(np.max(qnorm(p))) for p in pts)
    d12, d23, d34, d41 = (pts[0] - pts[1], pts[1] - pts[2],
                          pts[2] - pts[3], pts[3] - pts[0])
    for name, d in (("z1 - z2", d12), ("z2 - z3", d23), ("z4 - z1", d41)):
        if scale == 0.0 or np.any(qnorm(d) <= INVERTIBILITY_TOL * scale):
            raise NonInvertibleDifference(f"difference {name} is not invertible")
    return qmul(qmul(qmul(d12, qinv(d23)), d34), qinv(d41))


def multi_ratio6(x1, x2, x3, x4, x5, x6):
    """(x1-x2)(x2-x3)^-1 (x3-x4)(x4-x5)^-1 (x5-x6)(x6-x1)^-1."""
    return Quaternion(multi_ratio6_array(x1, x2, x3, x4, x5, x6))


def cross_ratio4(z1, z2, z3, z4):
    """(z1-z2)(z2-z3)^-1 (z3-z4)(z4-z1)^-1."""
    return Quaternion(cross_ratio4_array(z1, z2, z3, z4))


# ---------------------------------------------------------------------------
# projective points

def hpoint_normalize(v):
    v = np.asarray(v, dtype=float)
    n = np.sqrt(np.sum(v ** 2, axis=(-2, -1)))
    return v / n[..., None, None]


def hermitian(u, v):
    """Quaternionic hermitian product conj(u0) v0 + conj(u1) v1 on (..., 2, 4)."""
    return np.sum(qmul(qconj(u), v), axis=-2)


def hpoint_distance(u, v):
    """Distance between the lines u H and v H (0 iff equal, at most 1)."""
    u = hpoint_normalize(u)
    v = hpoint_normalize(v)
    proj = qmul(u, hermitian(u, v)[..., None, :])
    return np.sqrt(np.sum((v - proj) ** 2, axis=(-2, -1)))


def affine_coordinate(v):
    """x with v H = (x, 1) H; infinite points raise ZeroDivisionError."""
    v = np.asarray(v, dtype=float)
    if np.any(qnorm(v[..., 1, :]) <= 1e-14 * np.sqrt(np.sum(v ** 2, axis=(-2, -1)))):
        raise ZeroDivisionError("point at infinity has no affine coordinate")
    return qmul(v[..., 0, :], qinv(v[..., 1, :]))


def from_affine(x):
    x = as_quat(x)
    out = np.zeros(x.shape[:-1] + (2, 4))
    out[..., 0, :] = x
    out[..., 1, 0] = 1.0
    return out


def moebius_apply(a, v):
    """Apply a quaternionic 2x2 matrix (2, 2, 4) to homogeneous points (..., 2, 4)."""
    a = np.asarray(a, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.sum(qmul(a, v[..., None, :, :]), axis=-2)


def distance_to_infinity(v):
    """|second component| of the normalized representative."""
    return qnorm(hpoint_normalize(v)[..., 1, :])


def random_moebius(rng):
    """A random quaternionic 2x2 matrix, well conditioned."""
    while True:
        a = rng.uniform(-1.0, 1.0, size=(2, 2, 4))
        s = np.linalg.svd(complexify(a), compute_uv=False)
        if s[-1] > 0.2 * s[0]:
            return a


def affine_chart(points, rng=None, tol=1e-6):
    """Affine coordinates of homogeneous points, moving all of them off infinity.

    Returns ``(coords, matrix)`` where ``matrix`` is the Moebius normalization
    that was applied (identity when none was needed).
    """
    pts = np.asarray(points, dtype=float)
    matrix = qidentity(2)
    if np.min(distance_to_infinity(pts)) > tol:
        return affine_coordinate(pts), matrix
    rng = np.random.default_rng(0) if rng is None else rng
    for _ in range(100):
        matrix = random_moebius(rng)
        moved = moebius_apply(matrix, pts)
        if np.min(distance_to_infinity(moved)) > 1e-3:
            return affine_coordinate(moved), matrix
    raise NonInvertibleDifference("could not find an affine chart for the points")


def splitting_projections(a, b):
    """Projections P onto A along B and Q onto B along A, as (2, 2, 4) arrays."""
    a = hpoint_normalize(a.representative if isinstance(a, HPoint) else a)
    b = hpoint_normalize(b.representative if isinstance(b, HPoint) else b)
    if hpoint_distance(a, b) < INVERTIBILITY_TOL:
        raise DegenerateSplitting("the two lines coincide")
    frame = np.stack([a, b], axis=1)  # columns a and b
    frame_c = complexify(frame)
    inv = np.linalg.inv(frame_c)
    keep_a = np.diag([1.0, 1.0, 0.0, 0.0]).astype(complex)
    p_c = frame_c @ keep_a @ inv
    q_c = np.eye(4) - p_c
    return decomplexify(p_c), decomplexify(q_c)


# ---------------------------------------------------------------------------
# light object wrappers

class Quaternion:
    """A quaternion a + b i + c j + d k."""

    __slots__ = ("q",)

    def __init__(self, a=0.0, b=0.0, c=0.0, d=0.0):
        if np.ndim(a) == 1 and np.size(a) == 4:
            self.q = np.asarray(a, dtype=float).copy()
        elif isinstance(a, Quaternion):
            self.q = a.q.copy()
        elif isinstance(a, complex):
            self.q = np.array([a.real, a.imag, c, d], dtype=float)
        else:
            self.q = np.array([a, b, c, d], dtype=float)

    @property
    def a(self):
        return float(self.q[0])

    @property
    def b(self):
        return float(self.q[1])

    @property
    def c(self):
        return float(self.q[2])

    @property
    def d(self):
        return float(self.q[3])

    def __array__(self, dtype=None, copy=None):
        return self.q.astype(dtype) if dtype is not None else self.q.copy()

    @staticmethod
    def _coerce(other):
        return other if isinstance(other, Quaternion) else Quaternion(as_quat(other))

    def __add__(self, other):
        return Quaternion(self.q + self._coerce(other).q)

    __radd__ = __add__

    def __sub__(self, other):
        return Quaternion(self.q - self._coerce(other).q)

    def __rsub__(self, other):
        return Quaternion(self._coerce(other).q - self.q)

    def __neg__(self):
        return Quaternion(-self.q)

    def __mul__(self, other):
        return Quaternion(qmul(self.q, self._coerce(other).q))

    def __rmul__(self, other):
        return Quaternion(qmul(self._coerce(other).q, self.q))

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def conj(self):
        return Quaternion(qconj(self.q))

    def norm(self):
        return float(qnorm(self.q))

    def inverse(self):
        if self.norm() == 0.0:
            raise ZeroDivisionError("zero quaternion has no inverse")
        return Quaternion(qinv(self.q))

    def isclose(self, other, tol=1e-12):
        return float(qnorm(self.q - self._coerce(other).q)) <= tol

    def __eq__(self, other):
        try:
            return bool(np.array_equal(self.q, self._coerce(other).q))
        except (TypeError, ValueError):
            return NotImplemented

    __hash__ = None

    def __repr__(self):
        a, b, c, d = self.q
        return f"Quaternion({a!r}, {b!r}, {c!r}, {d!r})"


I = Quaternion(0, 1, 0, 0)
J = Quaternion(0, 0, 1, 0)
K = Quaternion(0, 0, 0, 1)
ONE = Quaternion(1, 0, 0, 0)


class QVec2:
    """An element of H^2 with quaternions acting from the right."""

    __slots__ = ("v",)

    def __init__(self, x0, x1=None):
        if x1 is None:
            self.v = np.asarray(x0, dtype=float).reshape(2, 4).copy()
        else:
            self.v = np.stack([as_quat(x0), as_quat(x1)])

    @property
    def x0(self):
        return Quaternion(self.v[0])

    @property
    def x1(self):
        return Quaternion(self.v[1])

    def __mul__(self, q):
        return QVec2(qmul(self.v, as_quat(q)[None, :]))

    def __add__(self, other):
        return QVec2(self.v + other.v)

    def __sub__(self, other):
        return QVec2(self.v - other.v)

    def to_complex(self):
        return qvec_to_c(self.v)

    def __repr__(self):
        return f"QVec2({self.x0!r}, {self.x1!r})"


class HPoint:
    """The quaternionic line representative * H in H^2, a point of HP^1 = S^4."""

    __slots__ = ("representative",)

    def __init__(self, representative):
        rep = representative.v if isinstance(representative, QVec2) else representative
        rep = np.asarray(rep, dtype=float).reshape(2, 4)
        if not np.any(rep):
            raise ValueError("an HPoint needs a nonzero representative")
        self.representative = rep.copy()

    @classmethod
    def from_affine(cls, x):
        return cls(from_affine(x))

    @classmethod
    def infinity(cls):
        return cls(np.array([[1.0, 0, 0, 0], [0, 0, 0, 0]]))

    def affine(self):
        return Quaternion(affine_coordinate(self.representative))

    def distance(self, other):
        return float(hpoint_distance(self.representative, other.representative))

    def isclose(self, other, tol=1e-9):
        return self.distance(other) <= tol

    def __eq__(self, other):
        if not isinstance(other, HPoint):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None

    def __repr__(self):
        return f"HPoint({self.representative.tolist()!r})"


class CPoint3:
    """A point of CP^3 under C^4 = (H^2, i)."""

    __slots__ = ("representative",)

    def __init__(self, representative):
        rep = np.asarray(representative, dtype=complex).reshape(4)
        if not np.any(rep):
            raise ValueError("a CPoint3 needs a nonzero representative")
        self.representative = rep.copy()

    def distance(self, other):
        u = self.representative / np.linalg.norm(self.representative)
        v = other.representative / np.linalg.norm(other.representative)
        return float(np.linalg.norm(v - u * np.vdot(u, v)))

    def isclose(self, other, tol=1e-9):
        return self.distance(other) <= tol

    def __eq__(self, other):
        if not isinstance(other, CPoint3):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None

    def __repr__(self):
        return f"CPoint3({self.representative.tolist()!r})"


def twistor_project(p):
    """The quaternionic line spanned by a complex line of C^4 = (H^2, i)."""
    rep = p.representative if isinstance(p, CPoint3) else np.asarray(p, dtype=complex)
    return HPoint(c_to_qvec(rep))
