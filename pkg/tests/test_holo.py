import numpy as np
import pytest

from dhg.errors import BasePoint, BlackTriangleDegenerate, DegenerateTriangle
from dhg.holo import (
    OMEGA, HolomorphicStructure, Immersion, PlanarPatch, annihilator_form, holomorphic_sections,
    induced_structure, is_holomorphic, kodaira_inverse, linear_system, projected_constants,
    surface_edges, vacuum_structure,
)
from dhg.mesh import RegularTorus
from dhg.quatlin import (
    affine_coordinate, as_quat, conj_invariants, cross_ratio4_array, hpoint_distance, qmul,
    random_moebius,
)

from conftest import random_quats


def quadruple_invariants(x, quads):
    x = as_quat(x)
    q = np.asarray(quads)
    return conj_invariants(cross_ratio4_array(x[q[:, 0]], x[q[:, 1]], x[q[:, 2]], x[q[:, 3]]))


def test_annihilator_of_collinear_points():
    cp, cq, cr = annihilator_form(0.0, 1.0, 2.0)
    np.testing.assert_allclose([cp[0], cq[0], cr[0]], [-1, 2, -1])
    np.testing.assert_allclose([cp[1:], cq[1:], cr[1:]], 0, atol=1e-15)


def test_annihilator_matches_complex_formula(rng):
    z = rng.normal(size=3) + 1j * rng.normal(size=3)
    cp, cq, cr = annihilator_form(*z)
    expected = [(z[2] - z[1]) / (z[0] - z[1]), (z[2] - z[0]) / (z[1] - z[0]), -1]
    np.testing.assert_allclose([cp, cq, cr], as_quat(np.array(expected)), atol=1e-12)


def test_annihilator_kills_constants_and_coordinates(rng):
    x = random_quats(rng, 3, 5)
    cp, cq, cr = annihilator_form(*x)
    np.testing.assert_allclose(cp + cq + cr, 0, atol=1e-12)
    total = qmul(cp, x[0]) + qmul(cq, x[1]) + qmul(cr, x[2])
    np.testing.assert_allclose(total, 0, atol=1e-12)


def test_annihilator_rejects_repeated_vertex():
    with pytest.raises(DegenerateTriangle):
        annihilator_form(0.0, 1.0, 1.0)


def test_structure_rejects_zero_coefficient():
    coeffs = np.zeros((1, 3, 4))
    coeffs[0, :2, 0] = 1.0
    with pytest.raises(DegenerateTriangle):
        HolomorphicStructure([[0, 1, 2]], coeffs, 3)


def test_constants_are_holomorphic(nine_point, rng):
    _, _, hs, _ = nine_point
    sections = projected_constants(hs, rng.normal(size=(6, 2, 4)))
    for s in sections:
        assert is_holomorphic(s, hs) < 1e-10


def test_residuals_of_zero_and_random_sections(nine_point, rng):
    _, _, hs, _ = nine_point
    assert is_holomorphic(np.zeros((hs.n_vertices, 4)), hs) == 0.0
    assert is_holomorphic(rng.normal(size=(hs.n_vertices, 4)), hs) > 1e-3


def test_coinciding_black_vertices_are_rejected(rng):
    torus = RegularTorus(((2, 0), (0, 2)))
    x = rng.normal(size=(4, 4))
    b = torus.black[0]
    x[b[1]] = x[b[0]]
    with pytest.raises(BlackTriangleDegenerate):
        induced_structure(torus, Immersion.from_affine(x))


def test_generic_torus_has_two_dimensional_sections(nine_point):
    _, _, hs, _ = nine_point
    basis = holomorphic_sections(hs)
    assert len(basis) == 2
    for s in basis:
        assert is_holomorphic(s, hs) < 1e-9


def test_standard_system_recovers_chart_values(nine_point):
    _, _, hs, _ = nine_point
    psi, phi = linear_system(hs)
    f = kodaira_inverse(psi, phi)
    assert np.max(hpoint_distance(f.points, Immersion.from_affine(hs.x).points)) < 1e-12


def test_swapped_system_gives_a_moebius_image(nine_point, rng):
    _, _, hs, _ = nine_point
    psi, phi = linear_system(hs)
    f = kodaira_inverse(psi, phi)
    g = kodaira_inverse(phi, psi)
    quads = [rng.choice(hs.n_vertices, size=4, replace=False) for _ in range(10)]
    a = quadruple_invariants(affine_coordinate(f.points), quads)
    b = quadruple_invariants(affine_coordinate(g.points), quads)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_kernel_basis_recovers_immersion_up_to_moebius(nine_point, rng):
    torus, f, hs, _ = nine_point
    psi, phi = holomorphic_sections(hs)
    g = kodaira_inverse(psi, phi, edges=surface_edges(torus.black))
    quads = [rng.choice(hs.n_vertices, size=4, replace=False) for _ in range(10)]
    np.testing.assert_allclose(quadruple_invariants(hs.x, quads),
                               quadruple_invariants(affine_coordinate(g.points), quads),
                               atol=1e-8)


def test_vanishing_psi_is_a_base_point():
    psi = np.array([[1.0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0]])
    with pytest.raises(BasePoint):
        kodaira_inverse(psi, psi)


def test_moebius_image_has_the_same_cross_ratios(nine_point, rng):
    torus, f, hs, _ = nine_point
    hs2 = induced_structure(torus, f.moebius(random_moebius(rng)))
    quads = [rng.choice(hs.n_vertices, size=4, replace=False) for _ in range(10)]
    np.testing.assert_allclose(quadruple_invariants(hs.x, quads),
                               quadruple_invariants(hs2.x, quads), atol=1e-8)
    assert len(holomorphic_sections(hs2)) == 2


def test_immersion_json_round_trip(rng):
    f = Immersion.from_affine(rng.normal(size=(5, 4)))
    g = Immersion.from_json(f.to_json())
    assert np.max(hpoint_distance(f.points, g.points)) < 1e-14


def test_edge_violations_are_reported():
    f = Immersion.from_affine(np.array([0.0, 1.0, 1.0]) + 0j)
    assert f.edge_violations([[0, 1], [1, 2]]) == [(1, 2)]


class TestVacuum:
    patch = PlanarPatch(3, 2)
    hs = vacuum_structure(patch)

    def test_equilateral_embedding_is_holomorphic(self):
        assert is_holomorphic(as_quat(self.patch.positions()), self.hs) < 1e-12

    def test_rotated_embedding_is_holomorphic(self):
        z = OMEGA * self.patch.positions() + 2.0
        assert is_holomorphic(as_quat(z), self.hs) < 1e-12

    def test_reflected_embedding_is_not_holomorphic(self):
        z = np.conj(self.patch.positions())
        assert is_holomorphic(as_quat(z), self.hs) > 0.1

    def test_collapsed_triangle_is_not_holomorphic(self):
        z = self.patch.positions().copy()
        b = self.patch.black[0]
        z[b[2]] = z[b[1]]
        assert is_holomorphic(as_quat(z), self.hs) > 0.1

    def test_patch_sections_include_the_embedding(self):
        # an open patch has many sections; the embedding and constants lie among them
        basis = holomorphic_sections(self.hs)
        assert len(basis) > 2
        for s in basis:
            assert is_holomorphic(s, self.hs) < 1e-9
