import numpy as np
import pytest

from spotlights import (
    BoundingSphere,
    GeometryError,
    PointCloud,
    Ray,
    TriangleMesh,
    bounding_box,
    bounding_sphere,
    normalize_to_unit_sphere,
)
from spotlights.shapes import icosphere

UNIT_CUBE_VERTS = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
CUBE_TRIS = np.array(
    [
        (0, 1, 3), (0, 3, 2), (4, 6, 7), (4, 7, 5),
        (0, 4, 5), (0, 5, 1), (2, 3, 7), (2, 7, 6),
        (0, 2, 6), (0, 6, 4), (1, 5, 7), (1, 7, 3),
    ]
)


def unit_cube():
    return TriangleMesh(UNIT_CUBE_VERTS, CUBE_TRIS)


class TestTriangleMesh:
    def test_degenerate_triangles_dropped_with_count(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0]], dtype=float)
        tris = np.array([(0, 1, 2), (0, 1, 3)])  # second is collinear
        mesh = TriangleMesh(verts, tris)
        assert mesh.n_triangles == 1
        assert mesh.dropped_degenerate == 1

    def test_index_out_of_range(self):
        with pytest.raises(GeometryError):
            TriangleMesh(np.zeros((2, 3)), np.array([(0, 1, 2)]))

    def test_non_finite_vertices_rejected(self):
        verts = np.array([[0, 0, 0], [np.nan, 0, 0], [0, 1, 0]])
        with pytest.raises(GeometryError):
            TriangleMesh(verts, np.array([(0, 1, 2)]))

    def test_arrays_read_only(self):
        mesh = unit_cube()
        with pytest.raises(ValueError):
            mesh.vertices[0, 0] = 5.0


class TestRay:
    def test_requires_unit_direction(self):
        with pytest.raises(GeometryError):
            Ray(np.zeros(3), np.array([0.0, 0.0, 2.0]))

    def test_at(self):
        r = Ray(np.array([1.0, 0, 0]), np.array([0.0, 0, 1.0]))
        assert np.allclose(r.at(2.5), [1, 0, 2.5])


class TestBoundingBox:
    def test_unit_cube(self):
        lo, hi = bounding_box(unit_cube())
        assert np.array_equal(lo, [0, 0, 0])
        assert np.array_equal(hi, [1, 1, 1])

    def test_single_vertex(self):
        mesh = TriangleMesh(np.array([[2.0, -1.0, 3.0]]), np.zeros((0, 3), dtype=int))
        lo, hi = bounding_box(mesh)
        assert np.array_equal(lo, [2, -1, 3])
        assert np.array_equal(hi, [2, -1, 3])

    def test_icosphere_extents_match_direct_scan(self):
        mesh = icosphere(3, radius=0.5)
        lo, hi = bounding_box(mesh)
        # independent scan over the generated vertices
        want_lo = np.array([min(v[i] for v in mesh.vertices) for i in range(3)])
        want_hi = np.array([max(v[i] for v in mesh.vertices) for i in range(3)])
        assert np.array_equal(lo, want_lo)
        assert np.array_equal(hi, want_hi)
        assert np.all(np.abs(lo + 0.5) < 0.02)  # vertex discretization
        assert np.all(np.abs(hi - 0.5) < 0.02)

    def test_empty_mesh(self):
        mesh = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int))
        with pytest.raises(GeometryError, match="empty geometry"):
            bounding_box(mesh)

    def test_vertex_permutation_invariance(self, rng):
        mesh = icosphere(2, radius=0.7)
        perm = rng.permutation(mesh.n_vertices)
        inv = np.argsort(perm)
        permuted = TriangleMesh(mesh.vertices[perm], inv[mesh.triangles])
        assert np.array_equal(bounding_box(mesh)[0], bounding_box(permuted)[0])
        assert np.array_equal(bounding_box(mesh)[1], bounding_box(permuted)[1])


class TestBoundingSphere:
    def test_unit_cube(self):
        s = bounding_sphere(unit_cube())
        assert np.allclose(s.center, [0.5, 0.5, 0.5])
        assert s.radius == pytest.approx(np.sqrt(3) / 2, abs=1e-15)

    def test_degenerate_box_diagonal(self):
        mesh = TriangleMesh(np.array([[0.0, 0, 0], [2.0, 0, 0]]), np.zeros((0, 3), dtype=int))
        s = bounding_sphere(mesh)
        assert np.allclose(s.center, [1, 0, 0])
        assert s.radius == pytest.approx(1.0)

    def test_contains_all_vertices_random(self, rng):
        for _ in range(10):
            verts = rng.normal(size=(100, 3)) * rng.uniform(0.5, 3.0, 3)
            mesh = TriangleMesh(verts, np.zeros((0, 3), dtype=int))
            s = bounding_sphere(mesh)
            assert s.contains(mesh.vertices)

    def test_single_point_degenerate(self):
        mesh = TriangleMesh(np.array([[1.0, 2.0, 3.0]]), np.zeros((0, 3), dtype=int))
        with pytest.raises(GeometryError, match="degenerate"):
            bounding_sphere(mesh)

    def test_radius_must_be_positive(self):
        with pytest.raises(GeometryError):
            BoundingSphere(np.zeros(3), 0.0)
        with pytest.raises(GeometryError):
            BoundingSphere(np.zeros(3), -1.0)


class TestNormalize:
    def test_identity_when_already_unit(self):
        mesh = icosphere(2, radius=1.0)
        out = normalize_to_unit_sphere(mesh, BoundingSphere(np.zeros(3), 1.0))
        assert np.allclose(out.vertices, mesh.vertices)

    def test_cube_corners_land_on_unit_sphere(self):
        mesh = unit_cube()
        out = normalize_to_unit_sphere(mesh, bounding_sphere(mesh))
        norms = np.linalg.norm(out.vertices, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-12)  # every corner is extremal

    def test_translation_commutes(self, rng):
        mesh = icosphere(2, radius=0.4)
        shift = rng.normal(size=3)
        moved = TriangleMesh(mesh.vertices + shift, mesh.triangles)
        a = normalize_to_unit_sphere(mesh, bounding_sphere(mesh))
        b = normalize_to_unit_sphere(moved, bounding_sphere(moved))
        assert np.allclose(a.vertices, b.vertices, atol=1e-12)

    def test_roundtrip_invariant_on_corpus(self, corpus):
        for name, mesh in corpus.items():
            out = normalize_to_unit_sphere(mesh, bounding_sphere(mesh))
            s = bounding_sphere(out)
            assert np.linalg.norm(s.center) < 1e-9, name
            assert abs(s.radius - 1.0) < 1e-9, name
