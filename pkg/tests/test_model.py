import numpy as np
import pytest

from spotlights import (
    BoundingSphere,
    DepthArray,
    GeometryError,
    build_bvh,
    build_model,
    decode,
    encode,
    model_digest,
    ordered_correspondence,
)
from spotlights.shapes import cube, icosphere

from oracles import closest_point_distances, ray_sphere_t


@pytest.fixture(scope="module")
def model_32x64():
    return build_model(32, 64, np.radians(60))


@pytest.fixture(scope="module")
def half_sphere_mesh():
    return icosphere(3, radius=0.5)


class TestBuildModel:
    def test_standard_resolution(self, model_32x64):
        assert model_32x64.n_rays == 2048
        assert model_32x64.primary_points.shape == (32, 3)
        assert model_32x64.ray_directions.shape == (2048, 3)

    def test_high_resolution(self):
        model = build_model(256, 64, np.radians(60))
        assert model.n_rays == 16384

    def test_single_ray_is_pole_to_center(self):
        model = build_model(1, 1, np.radians(45))
        assert np.allclose(model.primary_points[0], [0, 0, 1], atol=1e-15)
        assert np.allclose(model.ray_directions[0], [0, 0, -1], atol=1e-15)

    def test_blocks_stay_within_opening_angle(self, model_32x64):
        m = model_32x64.m_secondary
        for k in range(model_32x64.n_primary):
            axis = -model_32x64.primary_points[k]
            block = model_32x64.ray_directions[k * m : (k + 1) * m]
            angles = np.arccos(np.clip(block @ axis, -1, 1))
            assert np.all(angles <= np.radians(60) + 1e-9)

    def test_directions_unit_norm(self, model_32x64):
        norms = np.linalg.norm(model_32x64.ray_directions, axis=1)
        assert np.abs(norms - 1.0).max() < 1e-12

    def test_deterministic_and_digest(self):
        a = build_model(8, 16, 0.9)
        b = build_model(8, 16, 0.9)
        assert np.array_equal(a.ray_directions, b.ray_directions)
        assert a.model_id == b.model_id
        assert a.model_id != build_model(8, 17, 0.9).model_id
        assert a.model_id != build_model(8, 16, 0.91).model_id
        assert len(model_digest(8, 16, 0.9)) == 8

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            build_model(0, 4, 1.0)
        with pytest.raises(ValueError):
            build_model(4, 0, 1.0)
        with pytest.raises(ValueError):
            build_model(4, 4, 2.0)  # > pi/2


class TestEncode:
    def test_pole_ray_depth_on_centered_sphere(self, half_sphere_mesh):
        model = build_model(1, 1, np.radians(45))
        depths = encode(model, half_sphere_mesh)
        # pole viewpoint, ray straight at the center: first hit at distance
        # 0.5, normalized by the diameter to 0.25
        assert depths.values[0] == pytest.approx(0.25, abs=1e-3)

    def test_all_rays_match_analytic_sphere_oracle(self, model_32x64, half_sphere_mesh):
        depths = encode(model_32x64, half_sphere_mesh)
        t = ray_sphere_t(model_32x64.ray_origins, model_32x64.ray_directions, np.zeros(3), 0.5)
        # impact parameter of each ray line relative to the sphere center;
        # near-tangent rays (impact ~ 0.5) are excluded because the faceted
        # icosphere and the true sphere legitimately disagree there
        impact = np.linalg.norm(
            np.cross(model_32x64.ray_origins, model_32x64.ray_directions), axis=1
        )
        clear_hit = impact <= 0.45
        clear_miss = impact >= 0.55
        assert np.all(depths.values[clear_hit] > 0)
        assert np.all(depths.values[clear_miss] == 0.0)
        # within the clear-hit band the facet sagitta bounds the depth error
        err = np.abs(depths.values[clear_hit] - t[clear_hit] / 2.0)
        assert err.max() < 5e-3

    def test_misses_are_zero_sentinels(self, model_32x64, half_sphere_mesh):
        depths = encode(model_32x64, half_sphere_mesh)
        assert (depths.values == 0.0).any()
        assert depths.values.min() == 0.0

    def test_depths_in_unit_range(self, model_32x64, unit_corpus):
        for mesh in unit_corpus.values():
            v = encode(model_32x64, mesh).values
            assert v.min() >= 0.0
            assert v.max() <= 1.0

    def test_mesh_outside_unit_ball_rejected(self, model_32x64):
        big = icosphere(1, radius=1.5)
        with pytest.raises(GeometryError, match="exceeds bounding sphere"):
            encode(model_32x64, big)

    def test_bit_identical_runs_and_workers(self, model_32x64, half_sphere_mesh):
        a = encode(model_32x64, half_sphere_mesh)
        b = encode(model_32x64, half_sphere_mesh)
        c = encode(model_32x64, half_sphere_mesh, workers=4)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.values, c.values)

    def test_triangle_permutation_invariance(self, model_32x64, rng, half_sphere_mesh):
        perm = rng.permutation(half_sphere_mesh.n_triangles)
        shuffled = type(half_sphere_mesh)(
            half_sphere_mesh.vertices, half_sphere_mesh.triangles[perm]
        )
        a = encode(model_32x64, half_sphere_mesh)
        b = encode(model_32x64, shuffled)
        assert np.array_equal(a.values, b.values)

    def test_prebuilt_bvh_equivalent(self, model_32x64, half_sphere_mesh):
        bvh = build_bvh(half_sphere_mesh)
        a = encode(model_32x64, half_sphere_mesh, bvh=bvh)
        b = encode(model_32x64, half_sphere_mesh)
        assert np.array_equal(a.values, b.values)


class TestDepthArray:
    def test_range_validation(self):
        with pytest.raises(ValueError):
            DepthArray(np.array([0.5, 1.2]), model_id=b"x" * 8)
        with pytest.raises(ValueError):
            DepthArray(np.array([-0.1]), model_id=b"x" * 8)
        with pytest.raises(ValueError):
            DepthArray(np.array([]), model_id=b"x" * 8)


class TestDecode:
    def test_all_zero_decodes_empty(self, model_32x64):
        depths = DepthArray(np.zeros(2048), model_id=model_32x64.model_id)
        cloud = decode(model_32x64, depths, clip_threshold=0.0)
        assert len(cloud) == 0

    def test_pole_depth_maps_to_axis_point(self):
        model = build_model(1, 1, np.radians(45))
        depths = DepthArray(np.array([0.25]), model_id=model.model_id)
        cloud = decode(model, depths, clip_threshold=0.0)
        assert np.allclose(cloud.points[0], [0, 0, 0.5], atol=1e-12)

    def test_roundtrip_points_lie_on_surface(self, model_32x64, unit_corpus):
        mesh = unit_corpus["torus"]
        depths = encode(model_32x64, mesh)
        cloud = decode(model_32x64, depths, clip_threshold=0.0)
        assert len(cloud) > 0
        dist = closest_point_distances(cloud.points, mesh)
        assert dist.max() < 1e-6

    def test_clip_drops_small_depths_but_keeps_threshold(self, model_32x64):
        v = np.zeros(2048)
        v[5] = 0.1
        v[9] = 0.2
        v[11] = 0.3
        depths = DepthArray(v, model_id=model_32x64.model_id)
        cloud = decode(model_32x64, depths)  # default clip 0.2 keeps d >= 0.2
        assert list(cloud.ray_index) == [9, 11]
        assert len(decode(model_32x64, depths, clip_threshold=0.0)) == 3

    def test_clip_monotone(self, model_32x64, unit_corpus):
        depths = encode(model_32x64, unit_corpus["cube"])
        assert len(decode(model_32x64, depths)) <= len(decode(model_32x64, depths, 0.0))

    def test_world_frame_mapping(self, model_32x64):
        v = np.zeros(2048)
        v[0] = 0.25
        frame = BoundingSphere(np.array([10.0, 0.0, 0.0]), 2.0)
        depths = DepthArray(v, model_id=model_32x64.model_id, frame=frame)
        unit_pt = decode(model_32x64, depths, clip_threshold=0.0).points[0]
        world_pt = decode(model_32x64, depths, clip_threshold=0.0, world_frame=True).points[0]
        assert np.allclose(world_pt, frame.center + frame.radius * unit_pt)

    def test_ray_index_strictly_increasing(self, model_32x64, unit_corpus):
        depths = encode(model_32x64, unit_corpus["icosphere"])
        cloud = decode(model_32x64, depths, clip_threshold=0.0)
        assert np.all(np.diff(cloud.ray_index) > 0)

    def test_model_mismatch_rejected(self, model_32x64):
        other = build_model(32, 64, np.radians(59))
        depths = DepthArray(np.zeros(2048), model_id=other.model_id)
        with pytest.raises(ValueError, match="model mismatch"):
            decode(model_32x64, depths)
        short = DepthArray(np.zeros(100), model_id=model_32x64.model_id)
        with pytest.raises(ValueError, match="model mismatch"):
            decode(model_32x64, short)


class TestOrderedCorrespondence:
    def test_identity_for_identical_encodings(self, model_32x64, unit_corpus):
        mesh = unit_corpus["cube"]
        a = decode(model_32x64, encode(model_32x64, mesh), clip_threshold=0.0)
        b = decode(model_32x64, encode(model_32x64, mesh), clip_threshold=0.0)
        pairs = ordered_correspondence(a, b)
        assert len(pairs) == len(a)
        assert np.array_equal(pairs[:, 0], pairs[:, 1])

    def test_dropped_rays_give_index_intersection(self, model_32x64, unit_corpus):
        mesh = unit_corpus["cube"]
        depths = encode(model_32x64, mesh)
        full = decode(model_32x64, depths, clip_threshold=0.0)
        v = depths.values.copy()
        hit_idx = np.flatnonzero(v > 0)
        v[hit_idx[:5]] = 0.0  # knock out five rays
        partial = decode(
            model_32x64, DepthArray(v, model_id=depths.model_id), clip_threshold=0.0
        )
        pairs = ordered_correspondence(full, partial)
        assert len(pairs) == len(full) - 5
        assert np.array_equal(full.ray_index[pairs[:, 0]], partial.ray_index[pairs[:, 1]])

    def test_two_poses_pair_by_shared_rays(self, model_32x64, rng):
        # the same rigid object in two poses, normalized separately: pairs
        # exist exactly for rays that hit in both poses
        from spotlights import bounding_sphere, normalize_to_unit_sphere
        from spotlights.shapes import l_bracket

        mesh = l_bracket()
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        q *= np.sign(np.linalg.det(q))
        moved = type(mesh)(mesh.vertices @ q.T + rng.normal(size=3), mesh.triangles)
        clouds = []
        for m in (mesh, moved):
            unit = normalize_to_unit_sphere(m, bounding_sphere(m))
            clouds.append(decode(model_32x64, encode(model_32x64, unit), clip_threshold=0.0))
        a, b = clouds
        pairs = ordered_correspondence(a, b)
        shared = np.intersect1d(a.ray_index, b.ray_index)
        assert len(pairs) == len(shared)

    def test_requires_ray_indices(self, model_32x64):
        from spotlights import PointCloud

        plain = PointCloud(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            ordered_correspondence(plain, plain)
