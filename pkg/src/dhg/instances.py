"""Seeded random instances: immersions, polygons and lattice bases."""

import numpy as np

from .errors import ConfigError
from .holo import Immersion
from .mesh import RegularTorus
from .quatlin import hpoint_distance

SEPARATION = 1e-6


def random_affine_values(rng, count, complex_only=False):
    vals = rng.uniform(-1.0, 1.0, size=(count, 4))
    if complex_only:
        vals[:, 2:] = 0.0
    return vals


def _black_separated(points, black):
    d = [hpoint_distance(points[black[:, i]], points[black[:, (i + 1) % 3]]) for i in range(3)]
    return min(float(np.min(x)) for x in d) > SEPARATION


def random_immersion(torus, rng, complex_only=False):
    """I.i.d. uniform quaternion vertex values, redrawn until black triangles are separated."""
    while True:
        f = Immersion.from_affine(random_affine_values(rng, torus.n_vertices, complex_only))
        if _black_separated(f.points, torus.black):
            return f


def random_polygon(rng, n, complex_only=False):
    """Closed polygon with uniform quaternion vertices, redrawn until it is a polygon."""
    while True:
        vals = random_affine_values(rng, n, complex_only)
        pts = Immersion.from_affine(vals).points
        nxt = np.roll(pts, -1, axis=0)
        nxt2 = np.roll(pts, -2, axis=0)
        if min(np.min(hpoint_distance(pts, nxt)), np.min(hpoint_distance(pts, nxt2))) > SEPARATION:
            return pts


def random_regular_torus(rng, max_entry=5):
    """A random positively oriented lattice basis with regular quotient."""
    while True:
        g = tuple(int(v) for v in rng.integers(-max_entry, max_entry + 1, size=2))
        e = tuple(int(v) for v in rng.integers(-max_entry, max_entry + 1, size=2))
        det = g[0] * e[1] - g[1] * e[0]
        if det <= 0 or det > 40:
            continue
        try:
            return RegularTorus((g, e))
        except ConfigError:  # non-regular quotients are redrawn
            continue
