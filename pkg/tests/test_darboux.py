import numpy as np
import pytest

from dhg import darboux as db
from dhg import spectral as sp
from dhg.errors import (
    InconsistentSection, NonInvertibleDifference, RegularityViolation, TransformsCollide,
    ZeroProlongation,
)
from dhg.holo import projected_constants
from dhg.mesh import derive
from dhg.quatlin import qmul

OMEGA = np.exp(2j * np.pi / 3)
ONE = np.array([1.0, 0, 0, 0])


@pytest.fixture(scope="module")
def transform(nine_point):
    torus, f, hs, fd = nine_point
    mu, lam = sp.spectrum_points(hs, fd, np.random.default_rng(3), 1)[0]
    section = sp.eigen_section(hs, fd, mu, lam)
    ft = db.darboux_from_section(db.prolong(section, hs), f, torus.black)
    return ft, section, derive(torus).triangulation


def test_constant_section_prolongs_to_its_vector(nine_point, rng):
    _, _, hs, _ = nine_point
    vec = rng.normal(size=(2, 4))
    p = db.prolong(projected_constants(hs, vec), hs)
    assert p.residual < 1e-12
    np.testing.assert_allclose(p.hat, np.broadcast_to(vec, p.hat.shape), atol=1e-12)


def test_random_section_is_inconsistent(nine_point, rng):
    _, _, hs, _ = nine_point
    with pytest.raises(InconsistentSection):
        db.prolong(rng.normal(size=(hs.n_vertices, 4)), hs)


def test_transform_satisfies_the_hexagon_condition(nine_point, transform):
    _, f, _, _ = nine_point
    ft, _, tri = transform
    report = db.verify_multiratio(tri, f.points, ft.points)
    assert report["max_multiratio_dev"] < 1e-9
    assert report["regularity_violations"] == []


def test_perturbed_transform_fails_the_hexagon_condition(nine_point, transform, rng):
    _, f, _, _ = nine_point
    ft, _, tri = transform
    moved = ft.points.copy()
    moved[4] += 1e-3 * rng.normal(size=(2, 4))
    assert db.verify_multiratio(tri, f.points, moved)["max_multiratio_dev"] > 1e-6


def test_zero_prolongation_is_rejected(nine_point):
    torus, f, _, _ = nine_point
    p = db.Prolongation(np.zeros((torus.n_black, 2, 4)), 0.0)
    with pytest.raises(ZeroProlongation):
        db.darboux_from_section(p, f, torus.black)


def test_section_vanishing_at_a_vertex_violates_regularity(nine_point):
    torus, f, hs, _ = nine_point
    vec = np.stack([hs.x[0], ONE])
    p = db.prolong(projected_constants(hs, vec), hs)
    with pytest.raises(RegularityViolation) as info:
        db.darboux_from_section(p, f, torus.black)
    pairs = info.value.details["pairs"]
    assert {v for _, v in pairs} == {0}
    assert len(pairs) == 3


def test_connection_is_flat_around_white_faces(nine_point, transform):
    _, f, _, _ = nine_point
    ft, _, tri = transform
    hol = db.connection_holonomies(tri, f.points, ft.points)
    np.testing.assert_allclose(hol, np.broadcast_to(ONE, hol.shape), atol=1e-9)


def test_connection_is_flat_around_vertex_faces(nine_point, transform):
    torus, f, _, _ = nine_point
    ft, _, tri = transform
    for v in range(torus.n_vertices):
        np.testing.assert_allclose(db.vertex_face_holonomy(tri, f.points, ft.points, v), ONE,
                                   atol=1e-9)


def test_affine_holonomy_formula_agrees_with_transport(nine_point, transform, rng):
    _, f, _, _ = nine_point
    ft, _, tri = transform
    moved = ft.points + 1e-2 * rng.normal(size=ft.points.shape)
    formula = db.holonomy_formula(db.hexagon_points(tri, f.points, moved))
    transported = db.connection_holonomies(tri, f.points, moved)
    assert np.max(np.abs(formula - ONE)) > 1e-4
    np.testing.assert_allclose(formula, transported, atol=1e-9)


def test_bianchi_permutability(nine_point, transform, rng):
    torus, f, hs, fd = nine_point
    ft, section, tri = transform
    mu, lam = sp.spectrum_points(hs, fd, rng, 1)[0]
    other = sp.eigen_section(hs, fd, mu, lam)
    res = db.bianchi(torus, hs, section, other)
    assert res.chi_consistency < 1e-8
    assert res.report["min_chi_norm_ratio"] > 1e-6
    assert db.verify_multiratio(tri, ft.points, res.points)["max_multiratio_dev"] < 1e-7


def test_bianchi_rejects_identical_sections(nine_point, transform):
    torus, _, hs, _ = nine_point
    _, section, _ = transform
    with pytest.raises(TransformsCollide):
        db.bianchi(torus, hs, section, section)


def test_solve_chi_recovers_scalar(rng):
    u = rng.normal(size=(2, 4))
    chi = rng.normal(size=4)
    got, res = db.solve_chi(u, qmul(u, chi))
    np.testing.assert_allclose(got, chi, atol=1e-12)
    assert res < 1e-12


def lattice_field(values):
    return {(a, b, c): values(a, b, c)
            for a in range(3) for b in range(3) for c in range(3)}


def test_linear_planar_field_satisfies_the_cube_condition():
    # each hexagon is a regular planar hexagon
    field_ = lattice_field(lambda a, b, c: np.array(
        [(a + OMEGA * b + OMEGA ** 2 * c).real, (a + OMEGA * b + OMEGA ** 2 * c).imag, 0, 0]))
    worst, count = db.ds_cube_check(field_)
    assert count == 8
    assert worst < 1e-12


def test_random_field_fails_the_cube_condition(rng):
    worst, count = db.ds_cube_check(lattice_field(lambda a, b, c: rng.normal(size=4)))
    assert count == 8
    assert worst > 1e-2


def test_constant_field_is_degenerate():
    with pytest.raises(NonInvertibleDifference):
        db.ds_cube_check(lattice_field(lambda a, b, c: ONE))

