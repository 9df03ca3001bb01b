"""Acceptance suite: twelve numerical checks at desk scale.

Each check returns a :class:`CriterionResult` holding the measured values
next to their thresholds.  A global tolerance override replaces every
threshold, which is how deliberately impossible settings are exercised.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import darboux as db
from . import polygon as pg
from . import spectral as sp
from .holo import Immersion, holomorphic_sections, induced_structure, kodaira_inverse
from .instances import random_immersion, random_polygon, random_regular_torus
from .mesh import (
    RegularTorus, adapted_basis, derive, fundamental_domain, is_isomorphic,
)
from .quatlin import (
    c_to_qvec, conj_invariants, cross_ratio4_array, hpoint_distance, qnorm, qvec_to_c,
    affine_chart,
)

NINE_POINT = ((3, 0), (0, 3))
FOUR_POINT = ((2, 0), (0, 2))


@dataclass
class CriterionResult:
    number: int
    name: str
    metrics: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self):
        return all(m["passed"] for m in self.metrics.values())

    def line(self):
        worst = ", ".join(
            f"{k}={m['value']:.3g}{m['op']}" + (f"{m['tol']:.0e}" if m["op"] in "<>" else
                                                f"{m['tol']:g}")
            for k, m in self.metrics.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {worst}"

    def to_json(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "metrics": self.metrics, "detail": self.detail, "seconds": self.seconds}


class _Metrics:
    def __init__(self, override):
        self.override = override
        self.data = {}

    def below(self, key, value, tol):
        tol = self.override if self.override is not None else tol
        value = float(value)
        self.data[key] = {"value": value, "tol": tol, "op": "<",
                          "passed": bool(np.isfinite(value) and value < tol)}

    def above(self, key, value, tol):
        tol = self.override if self.override is not None else tol
        value = float(value)
        self.data[key] = {"value": value, "tol": tol, "op": ">",
                          "passed": bool(np.isfinite(value) and value > tol)}

    def at_least(self, key, value, bound):
        self.data[key] = {"value": float(value), "tol": float(bound), "op": ">=",
                          "passed": bool(value >= bound)}

    def equal(self, key, value, expected):
        self.data[key] = {"value": float(value), "tol": float(expected), "op": "==",
                          "passed": bool(value == expected)}


def _nine_point(rng, complex_only=False):
    torus = RegularTorus(NINE_POINT)
    f = random_immersion(torus, rng, complex_only)
    return torus, f, induced_structure(torus, f)


def _transform(hs, fd, f, torus, mu, lam):
    section = sp.eigen_section(hs, fd, mu, lam)
    return db.darboux_from_section(db.prolong(section, hs), f, torus.black), section


def four_point_oracle(rng, samples=6):
    """Largest relative error of the double fiber root against its closed form."""
    torus = RegularTorus(FOUR_POINT)
    fd = fundamental_domain(torus)
    quads = [np.array([0, 1, 2, 3], dtype=complex)]
    quads += [rng.normal(size=4) + 1j * rng.normal(size=4) for _ in range(10)]
    worst = 0.0
    smallest = 4
    for x in quads:
        data = sp.char_poly(induced_structure(torus, Immersion.from_affine(x)), fd, rng)
        for k in range(samples):
            mu = (0.5 + k / samples) * np.exp(2j * np.pi * (k + 0.3) / samples)
            s = (((x[0] - x[2]) * (x[1] - x[3]) * mu - (x[1] - x[2]) * (x[0] - x[3]))
                 / ((x[0] - x[1]) * (x[2] - x[3])))
            roots = data.fiber_roots(mu)
            # a k-fold root splits by eps^(1/k); the cluster mean stays accurate
            near = roots[np.abs(roots - s) < 1e-2 * max(1.0, abs(s))]
            smallest = min(smallest, len(near))
            err = abs(near.mean() - s) / max(1.0, abs(s)) if len(near) else np.inf
            worst = max(worst, err)
    return worst, smallest


def criterion_1(seed, tol=None):
    worst, smallest = four_point_oracle(np.random.default_rng(seed))
    m = _Metrics(tol)
    m.below("rel_err", worst, 1e-8)
    m.at_least("min_multiplicity", smallest, 2)
    return m.data, {"quadruples": 11}


def criterion_2(seed, tol=None):
    rng = np.random.default_rng(seed)
    bad = []
    bases = []
    for _ in range(20):
        t = random_regular_torus(rng)
        bases.append([list(t.basis.gamma), list(t.basis.eta)])
        tri = t.triangulation()
        ok = (t.n_vertices == len(t.black) == len(t.white)
              and bool(np.all(tri.valences() == 6)) and tri.check())
        third = derive(derive(derive(t)))
        ok = ok and third.role == "M" and is_isomorphic(tri, third.triangulation)
        if not ok:
            bad.append(bases[-1])
    m = _Metrics(None)
    m.equal("failures", len(bad), 0)
    return m.data, {"bases": bases, "failed": bad}


def criterion_3(seed, tol=None, tori=5, samples=3):
    rng = np.random.default_rng(seed)
    worst_mr = worst_hol = 0.0
    min_perturbed = np.inf
    agree = True
    threshold = 1e-7 if tol is None else tol
    for _ in range(tori):
        torus, f, hs = _nine_point(rng)
        fd = fundamental_domain(torus)
        tri = torus.triangulation()
        for mu, lam in sp.spectrum_points(hs, fd, rng, samples):
            ft, _ = _transform(hs, fd, f, torus, mu, lam)
            mr = db.verify_multiratio(tri, f.points, ft.points)["max_multiratio_dev"]
            hol = _holonomy_dev(tri, f.points, ft.points)
            worst_mr, worst_hol = max(worst_mr, mr), max(worst_hol, hol)
            agree &= (mr < threshold) == (hol < threshold)
            bent = ft.points.copy()
            bent[int(rng.integers(len(bent))), 0] += 1e-3 * rng.normal(size=4)
            mr_b = db.verify_multiratio(tri, f.points, bent)["max_multiratio_dev"]
            hol_b = _holonomy_dev(tri, f.points, bent)
            agree &= (mr_b < threshold) == (hol_b < threshold)
            min_perturbed = min(min_perturbed, mr_b, hol_b)
    m = _Metrics(tol)
    m.below("multiratio_dev", worst_mr, 1e-7)
    m.below("holonomy_dev", worst_hol, 1e-7)
    m.equal("equivalence_agrees", int(agree), 1)
    return m.data, {"perturbed_min_dev": min_perturbed}


def _holonomy_dev(tri, f_points, ft_points):
    hol = db.connection_holonomies(tri, f_points, ft_points)
    return float(np.max(qnorm(hol - np.array([1.0, 0, 0, 0]))))


def criterion_4(seed, tol=None):
    rng = np.random.default_rng(seed)
    torus, f, hs = _nine_point(rng)
    report = sp.genericity_check(hs, torus)
    expected = 2 * sum(d["thickness"] for d in report["directions"])
    worst = 0.0
    for d in range(3):
        data = sp.char_poly(hs, fundamental_domain(torus, adapted_basis(torus, d)), rng)
        for h in data.holonomies:
            worst = max(worst, data.relative_value(h, 0.0))
    m = _Metrics(tol)
    m.equal("n_ends", report["n_ends"], expected)
    m.equal("generic", int(report["generic"]), 1)
    m.below("root_residual", worst, 1e-8)
    return m.data, {"n_ends": report["n_ends"]}


def _conj_eval_defect(data, rng, count=8):
    worst = 0.0
    for _ in range(count):
        s, t = rng.normal(size=2) + 1j * rng.normal(size=2)
        worst = max(worst, abs(data(np.conj(s), np.conj(t)) - np.conj(data(s, t)))
                    / data.scale(s, t))
    return worst


def criterion_5(seed, tol=None):
    rng = np.random.default_rng(seed)
    torus, f, hs = _nine_point(rng)
    tdata = sp.char_poly(hs, fundamental_domain(torus), rng)
    pdata = pg.polygon_spectral(random_polygon(rng, 5))
    m = _Metrics(tol)
    m.below("torus_coeff_defect", tdata.rho_defect(), 1e-10)
    m.below("torus_eval_defect", _conj_eval_defect(tdata, rng), 1e-10)
    m.below("polygon_coeff_defect", pdata.rho_defect(), 1e-10)
    m.below("polygon_eval_defect", _conj_eval_defect(pdata, rng), 1e-10)
    return m.data, {}


def end_errors(hs, torus, f):
    """Per end: distance between F at the end and f at the upper vertex, worst per row."""
    worst = 0.0
    count = 0
    for d in range(3):
        fd = fundamental_domain(torus, adapted_basis(torus, d))
        for row in range(fd.m):
            for mu in sp.horizontal_holonomies(hs, fd, row):
                section = sp.eigen_section(hs, fd, mu, 0.0)
                blacks = [b for b, _, _ in fd.shaded[row]]
                values = sp.F_hat(hs, fd, section, blacks)
                for (b, slots, _), val in zip(fd.shaded[row], values):
                    top = torus.black[b, slots[2]]
                    worst = max(worst, float(hpoint_distance(c_to_qvec(val), f.points[top])))
                count += 1
    return worst, count


def criterion_6(seed, tol=None):
    rng = np.random.default_rng(seed)
    torus, f, hs = _nine_point(rng)
    worst, count = end_errors(hs, torus, f)
    m = _Metrics(tol)
    m.below("F_end_error", worst, 1e-7)
    return m.data, {"ends": count}


def criterion_7(seed, tol=None):
    rng = np.random.default_rng(seed)
    torus, f, hs = _nine_point(rng)
    fd = fundamental_domain(torus)
    (mu1, lam1), (mu2, lam2) = sp.spectrum_points(hs, fd, rng, 2)
    ft_a, sec_a = _transform(hs, fd, f, torus, mu1, lam1)
    ft_b, sec_b = _transform(hs, fd, f, torus, mu2, lam2)
    res = db.bianchi(torus, hs, sec_a, sec_b)
    tri1 = derive(torus).triangulation
    dev_a = db.verify_multiratio(tri1, ft_a.points, res.points)["max_multiratio_dev"]
    dev_b = db.verify_multiratio(tri1, ft_b.points, res.points)["max_multiratio_dev"]
    field_ = db.assemble_z3(torus, [f.points, ft_a.points, res.points],
                            ((-3, 5), (-3, 5), (-3, 5)))
    cube, cubes = db.ds_cube_check(field_)
    m = _Metrics(tol)
    m.below("multiratio_vs_sharp", dev_a, 1e-7)
    m.below("multiratio_vs_flat", dev_b, 1e-7)
    m.below("chi_consistency", res.chi_consistency, 1e-8)
    m.below("cube_multiratio", cube, 1e-7)
    return m.data, {"cubes": cubes}


def criterion_8(seed, tol=None):
    rng = np.random.default_rng(seed)
    torus, f, hs = _nine_point(rng)
    fd = fundamental_domain(torus)
    before = sp.char_poly(hs, fd, rng)
    mu, lam = sp.spectrum_points(hs, fd, rng, 1)[0]
    ft, _ = _transform(hs, fd, f, torus, mu, lam)
    after = sp.char_poly(induced_structure(torus, Immersion(ft.points)), fd, rng)
    diff = _padded_diff(before.normalized(), after.normalized())
    m = _Metrics(tol)
    m.below("coeff_diff", diff, 1e-6)
    return m.data, {"generic_after": after.generic}


def _padded_diff(a, b):
    shape = np.maximum(a.shape, b.shape)
    pad = lambda c: np.pad(c, [(0, shape[0] - c.shape[0]), (0, shape[1] - c.shape[1])])  # noqa: E731
    return float(np.max(np.abs(pad(a) - pad(b))))


def criterion_9(seed, tol=None):
    rng = np.random.default_rng(seed)
    m = _Metrics(tol)
    for n in (5, 6):
        pts = random_polygon(rng, n)
        h0 = pg.h_zero(pts)
        l1 = qvec_to_c(pts[1])
        # L_1 is the complex span of the lift and its j-image
        basis = np.stack([l1, qvec_to_c(_times_j(pts[1]))], axis=1)
        m.below(f"H0_on_L1_n{n}", np.max(np.abs(h0 @ basis)) / np.max(np.abs(h0)), 1e-12)
        _, top = pg.h_max(pts)
        if n % 2:
            m.below("Hmax_squared_n5", np.max(np.abs(top @ top)) / np.max(np.abs(top)) ** 2,
                    1e-12)
        else:
            sv = np.linalg.svd(top, compute_uv=False)
            m.above("Hmax_sv_ratio_n6", sv[-1] / sv[0], 1e-6)
    return m.data, {}


def _times_j(v):
    from .quatlin import J, qmul
    return qmul(v, J.q)


def criterion_10(seed, tol=None):
    rng = np.random.default_rng(seed)
    pts = random_polygon(rng, 5)
    diff, _, _ = pg.bridge_spectral_comparison(pts, rng)
    lam = 0.8 + 0.3j
    index = 0
    while True:
        try:
            eta, _, _ = pg.closed_darboux_transform(pts, lam, index)
            break
        except pg.EigenlineDegenerate:
            index += 1
    torus, f = pg.thin_cylinder_bridge(pts)
    dev = db.verify_multiratio(torus.triangulation(), f.points, eta)["max_multiratio_dev"]
    m = _Metrics(tol)
    m.below("curve_coeff_diff", diff, 1e-8)
    m.below("cylinder_multiratio", dev, 1e-8)
    return m.data, {}


def criterion_11(seed, tol=None):
    rng = np.random.default_rng(seed)
    m = _Metrics(tol)
    pts = random_polygon(rng, 6, complex_only=True)
    splits, p1, p2 = sp.split_char_poly(pg.holonomy_poly(pts), "lambda", "mu")
    m.equal("polygon_splits", int(splits), 1)
    if splits:
        m.below("polygon_conjugate_defect",
                np.max(np.abs(p1.coeffs - p2.coeffs.conj())) / np.max(np.abs(p1.coeffs)), 1e-10)
    torus, f, hs = _nine_point(rng, complex_only=True)
    splits, p1, p2 = sp.split_char_poly(sp.holonomy_poly(hs, fundamental_domain(torus)))
    m.equal("torus_splits", int(splits), 1)
    if splits:
        m.below("torus_conjugate_defect",
                np.max(np.abs(p1.coeffs - p2.coeffs.conj())) / np.max(np.abs(p1.coeffs)), 1e-10)
    return m.data, {}


def kodaira_round_trip(rng, quadruples=20):
    torus, f, hs = _nine_point(rng)
    basis = holomorphic_sections(hs)
    g = kodaira_inverse(basis[0], basis[1], torus.triangulation().black)
    fx, _ = affine_chart(f.points)
    gx, _ = affine_chart(g.points)
    worst = 0.0
    for _ in range(quadruples):
        a, b, c, d = rng.choice(torus.n_vertices, size=4, replace=False)
        cf = conj_invariants(cross_ratio4_array(fx[a], fx[b], fx[c], fx[d]))
        cg = conj_invariants(cross_ratio4_array(gx[a], gx[b], gx[c], gx[d]))
        worst = max(worst, float(np.max(np.abs(cf - cg) / np.maximum(1.0, np.abs(cf)))))
    return worst, len(basis)


def criterion_12(seed, tol=None):
    worst, dim = kodaira_round_trip(np.random.default_rng(seed))
    m = _Metrics(tol)
    m.below("cross_ratio_diff", worst, 1e-8)
    m.equal("section_dim", dim, 2)
    return m.data, {}


CRITERIA = {
    1: ("four-point torus oracle", criterion_1),
    2: ("combinatorial identities", criterion_2),
    3: ("Darboux multi-ratio", criterion_3),
    4: ("ends and genericity", criterion_4),
    5: ("rho-symmetry", criterion_5),
    6: ("end asymptotics of F", criterion_6),
    7: ("Bianchi permutability", criterion_7),
    8: ("spectral invariance under Darboux", criterion_8),
    9: ("polygon asymptotics", criterion_9),
    10: ("thin-cylinder equivalence", criterion_10),
    11: ("S2 splitting", criterion_11),
    12: ("Kodaira round trip", criterion_12),
}

ALIASES = {
    "fourpoint": 1, "combinatorics": 2, "multiratio": 3, "ends": 4, "rho": 5,
    "asymptotics": 6, "bianchi": 7, "invariance": 8, "polygon": 9, "bridge": 10,
    "splitting": 11, "kodaira": 12,
}


def resolve(selection):
    """Criterion numbers from names, aliases or numbers; all when empty."""
    if not selection:
        return sorted(CRITERIA)
    out = []
    for item in selection:
        key = str(item).strip().lower()
        if key.isdigit() and int(key) in CRITERIA:
            out.append(int(key))
        elif key in ALIASES:
            out.append(ALIASES[key])
        else:
            raise KeyError(item)
    return sorted(set(out))


def run_criterion(number, seed=42, tol=None):
    name, fn = CRITERIA[number]
    start = time.perf_counter()
    metrics, detail = fn(seed + number, tol)
    return CriterionResult(number, name, metrics, detail, time.perf_counter() - start)


def run_suite(seed=42, tol=None, selection=None):
    return [run_criterion(k, seed, tol) for k in resolve(selection)]
