import numpy as np
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dhg import polygon as pg
from dhg.errors import ConfigError
from dhg.holo import annihilator_form
from dhg.mesh import (
    LatticeBasis, RegularTorus, adapted_basis, fundamental_domain, length_and_thickness,
    normalize_adapted_basis,
)
from dhg.quatlin import (
    affine_chart, complexify, conj_invariants, cross_ratio4_array, from_affine, moebius_apply,
    multi_ratio6_array, qinv, qmul, qnorm, qvec_to_c, random_moebius, splitting_projections,
    twistor_project,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
quat = arrays(np.float64, 4, elements=finite)
seeds = st.integers(0, 2 ** 32 - 1)
common = settings(max_examples=60, deadline=None)


def well_separated(*qs, gap=1e-2):
    return all(qnorm(a - b) > gap for i, a in enumerate(qs) for b in qs[i + 1:])


@common
@given(quat, quat, quat)
def test_product_is_associative(p, q, r):
    np.testing.assert_allclose(qmul(qmul(p, q), r), qmul(p, qmul(q, r)), atol=1e-9)


@common
@given(quat, quat)
def test_norm_is_multiplicative(p, q):
    np.testing.assert_allclose(qnorm(qmul(p, q)), qnorm(p) * qnorm(q), rtol=1e-10, atol=1e-12)


@common
@given(quat)
def test_inverse(q):
    assume(qnorm(q) > 1e-3)
    np.testing.assert_allclose(qmul(q, qinv(q)), [1, 0, 0, 0], atol=1e-10)


@common
@given(quat, quat)
def test_complexify_is_a_homomorphism(p, q):
    np.testing.assert_allclose(complexify(qmul(p, q)), complexify(p) @ complexify(q),
                               atol=1e-9)


@common
@given(seeds)
def test_cross_ratio_class_is_moebius_invariant(seed):
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1, 1, size=(4, 4))
    assume(well_separated(*z, gap=0.1))
    moved, _ = affine_chart(moebius_apply(random_moebius(rng), from_affine(z)))
    assume(well_separated(*moved, gap=1e-3))
    np.testing.assert_allclose(conj_invariants(cross_ratio4_array(*moved)),
                               conj_invariants(cross_ratio4_array(*z)), rtol=1e-6, atol=1e-8)


@common
@given(seeds)
def test_multiratio_class_is_moebius_invariant(seed):
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1, 1, size=(6, 4))
    assume(well_separated(*z, gap=0.1))
    moved, _ = affine_chart(moebius_apply(random_moebius(rng), from_affine(z)))
    assume(well_separated(*moved, gap=1e-3))
    np.testing.assert_allclose(conj_invariants(multi_ratio6_array(*moved)),
                               conj_invariants(multi_ratio6_array(*z)), rtol=1e-6, atol=1e-8)


@common
@given(quat, quat, quat)
def test_annihilator_kills_the_affine_functions(a, b, c):
    assume(well_separated(a, b, c, gap=1e-1))
    cp, cq, cr = annihilator_form(a, b, c)
    np.testing.assert_allclose(cp + cq + cr, 0, atol=1e-9)
    total = qmul(cp, a) + qmul(cq, b) + qmul(cr, c)
    np.testing.assert_allclose(total, 0, atol=1e-8 * max(1, qnorm(a), qnorm(b), qnorm(c)))


@common
@given(seeds)
def test_splitting_projections(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(2, 2, 4))
    p, q = (complexify(m) for m in splitting_projections(a, b))
    assume(np.linalg.norm(p) < 1e4)
    np.testing.assert_allclose(p @ q, 0, atol=1e-8 * np.linalg.norm(p) ** 2)
    np.testing.assert_allclose(p + q, np.eye(4), atol=1e-9)


@common
@given(st.integers(-6, 6), st.integers(-6, 6), st.integers(-6, 6), st.integers(-6, 6))
def test_regular_quotients(a, b, c, d):
    assume(0 < a * d - b * c <= 30)
    try:
        torus = RegularTorus(((a, b), (c, d)))
    except ConfigError:
        return
    assert torus.n_vertices == torus.n_black == torus.n_white == a * d - b * c
    assert np.all(torus.valences() == 6)
    lengths = []
    for k in range(3):
        basis = adapted_basis(torus, k)
        length, thickness = length_and_thickness(torus, basis)
        fd = fundamental_domain(torus, basis)
        assert length * thickness == torus.n_vertices == fd.n * fd.m
        assert normalize_adapted_basis(basis) == basis
        lengths.append(length)
    gammas = [np.array(adapted_basis(torus, k).gamma) for k in range(3)]
    lcm = np.lcm.reduce(lengths)
    assert np.array_equal(sum((lcm // n) * g for n, g in zip(lengths, gammas)), [0, 0])


@common
@given(st.integers(2, 9), st.integers(-20, 20), st.integers(1, 5))
def test_normalization_is_idempotent_and_shift_invariant(n, shift, height):
    b = normalize_adapted_basis(LatticeBasis((n, 0), (shift, height)))
    assert normalize_adapted_basis(b) == b
    assert normalize_adapted_basis(LatticeBasis((n, 0), (shift + 3 * n, height))) == b


@common
@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_curve_step_has_cross_ratio_lambda(seed, re, im):
    lam = complex(re, im)
    assume(abs(lam) > 1e-2 and abs(lam - 1) > 1e-2)
    rng = np.random.default_rng(seed)
    gamma, gamma_next = rng.normal(size=(2, 2, 4))
    assume(np.linalg.norm(complexify(splitting_projections(gamma, gamma_next)[0])) < 1e3)
    lift = qvec_to_c(rng.normal(size=(2, 4)))
    nxt = pg.curve_darboux_step(gamma, gamma_next, lift, lam)
    eta, eta_next = twistor_project(lift).representative, twistor_project(nxt).representative
    dev = pg.curve_cross_ratio_check(gamma, gamma_next, eta, eta_next, lam)
    assert dev < 1e-6 * max(1.0, abs(lam))


@common
@given(seeds, st.integers(4, 7))
def test_closed_transform_closes(seed, n):
    rng = np.random.default_rng(seed)
    pts = from_affine(rng.uniform(-1, 1, size=(n, 4)))
    curve = pg.DiscreteCurve(pts)
    assume(curve.is_polygon(tol=1e-2))
    lam = 0.6 + 0.3j
    new, lifts, _ = pg.closed_darboux_transform(curve.points, lam)
    assert pg.closure_defect(curve.points, lifts, lam) < 1e-6
