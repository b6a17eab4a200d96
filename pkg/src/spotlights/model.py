"""The spherical ray-bundle model: a fixed arrangement of viewpoints and ray
directions that encodes a mesh as a 1D depth array and decodes depth arrays
back to ordered point clouds.

Viewpoints are Fibonacci samples of the unit sphere; each viewpoint carries a
cap bundle of ray directions aimed inward. A shape normalized into the unit
ball is then fully described by one first-hit distance per ray, divided by
the sphere diameter so stored depths live in ``[0, 1]``; ``0`` marks a miss.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import UNIT_SPHERE, BoundingSphere, GeometryError, PointCloud, TriangleMesh
from .raycast import Bvh, build_bvh, first_hit_batch
from .sampling import cap_points, sphere_points

__all__ = [
    "SpotlightsModel",
    "DepthArray",
    "build_model",
    "encode",
    "decode",
    "ordered_correspondence",
    "model_digest",
    "DEFAULT_CLIP",
    "MISS",
]

# Depths are first-hit distances divided by the diameter of the unit frame.
DEPTH_SCALE = 2.0
# Sentinel stored for rays that do not intersect the shape.
MISS = 0.0
# Default decode threshold below which predicted depths are treated as noise
# around the miss sentinel.
DEFAULT_CLIP = 0.2
# Hits closer than this are ignored (viewpoint touching geometry).
SELF_HIT_T = 1e-9
# Slack allowed when checking that a mesh fits the unit ball.
CONTAINMENT_TOL = 1e-6

_FORMULA_VERSION = "v1"


def model_digest(n_primary: int, m_secondary: int, opening_angle: float) -> bytes:
    """8-byte digest binding a depth array to the arrangement that made it.

    Covers the counts, the opening angle, and the lattice formula version, so
    arrays refuse to decode against a differently-shaped model.
    """
    key = f"spotlights-{_FORMULA_VERSION}|{int(n_primary)}|{int(m_secondary)}|{float(opening_angle).hex()}"
    return hashlib.sha256(key.encode("ascii")).digest()[:8]


@dataclass(frozen=True)
class SpotlightsModel:
    """Fixed ray arrangement: ``n_primary`` viewpoints, ``m_secondary`` rays
    each, stored primary-major (ray ``k*M + j`` is viewpoint ``k``, cap point
    ``j``)."""

    n_primary: int
    m_secondary: int
    opening_angle: float
    primary_points: np.ndarray  # (n_primary, 3)
    ray_directions: np.ndarray  # (n_primary * m_secondary, 3)
    frame: BoundingSphere = UNIT_SPHERE
    model_id: bytes = field(init=False)

    def __post_init__(self):
        if self.ray_directions.shape != (self.n_primary * self.m_secondary, 3):
            raise GeometryError("ray_directions must hold n_primary * m_secondary rows")
        if self.primary_points.shape != (self.n_primary, 3):
            raise GeometryError("primary_points must hold n_primary rows")
        object.__setattr__(
            self, "model_id", model_digest(self.n_primary, self.m_secondary, self.opening_angle)
        )

    @property
    def n_rays(self) -> int:
        return self.n_primary * self.m_secondary

    @property
    def ray_origins(self) -> np.ndarray:
        """Per-ray origins, shape ``(n_rays, 3)``."""
        return np.repeat(self.primary_points, self.m_secondary, axis=0)

    def with_frame(self, frame: BoundingSphere) -> "SpotlightsModel":
        return replace(self, frame=frame)


@dataclass(frozen=True)
class DepthArray:
    """Normalized first-hit depths, one per model ray, zero meaning miss.

    ``frame`` records the world-frame bounding sphere of the encoded object so
    decoded clouds can be mapped back to world units.
    """

    values: np.ndarray
    model_id: bytes
    frame: BoundingSphere = UNIT_SPHERE

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("depth values must be a non-empty 1D array")
        if not np.isfinite(v).all() or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("depth values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "model_id", bytes(self.model_id))

    def __len__(self) -> int:
        return len(self.values)


def build_model(n_primary: int, m_secondary: int, opening_angle: float) -> SpotlightsModel:
    """Construct the arrangement: Fibonacci viewpoints on the unit sphere,
    each with an equal-area cap bundle of ``m_secondary`` directions aimed at
    the sphere center, opened to ``opening_angle`` radians."""
    primaries = sphere_points(n_primary)
    blocks = []
    for p in primaries.directions:
        axis = -p  # viewpoints sit on the unit sphere centered at the origin
        blocks.append(cap_points(m_secondary, axis, opening_angle).directions)
    return SpotlightsModel(
        n_primary=int(n_primary),
        m_secondary=int(m_secondary),
        opening_angle=float(opening_angle),
        primary_points=primaries.directions,
        ray_directions=np.concatenate(blocks, axis=0),
    )


def _cast_chunk(bvh, mesh, origins, directions, lo, hi):
    t, tri = first_hit_batch(
        bvh,
        mesh,
        origins[lo:hi],
        directions[lo:hi],
        t_min=SELF_HIT_T,
        t_max=DEPTH_SCALE * (1.0 + CONTAINMENT_TOL),
    )
    return np.where(tri >= 0, np.minimum(t / DEPTH_SCALE, 1.0), MISS)


def encode(
    model: SpotlightsModel,
    mesh: TriangleMesh,
    frame: BoundingSphere | None = None,
    bvh: Bvh | None = None,
    workers: int = 1,
) -> DepthArray:
    """Cast every model ray at the mesh and record normalized first-hit
    depths.

    The mesh must already be normalized into the unit ball (see
    `core.normalize_to_unit_sphere`). ``frame`` stamps the world frame the
    mesh came from onto the result; it defaults to the model's frame. The
    output is bit-identical for any ``workers`` count since every ray is
    resolved independently.
    """
    if mesh.n_vertices == 0 or mesh.n_triangles == 0:
        raise GeometryError("empty geometry")
    max_norm = float(np.linalg.norm(mesh.vertices, axis=1).max())
    if max_norm > 1.0 + CONTAINMENT_TOL:
        raise GeometryError(
            f"object exceeds bounding sphere (max vertex norm {max_norm:.6g})"
        )
    if bvh is None:
        bvh = build_bvh(mesh)
    origins = model.ray_origins
    directions = model.ray_directions

    workers = max(1, int(workers))
    if workers == 1:
        depths = _cast_chunk(bvh, mesh, origins, directions, 0, model.n_rays)
    else:
        edges = np.linspace(0, model.n_rays, workers + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda se: _cast_chunk(bvh, mesh, origins, directions, se[0], se[1]),
                    zip(edges[:-1], edges[1:]),
                )
            )
        depths = np.concatenate(parts)
    return DepthArray(depths, model_id=model.model_id, frame=frame or model.frame)


def decode(
    model: SpotlightsModel,
    depths: DepthArray,
    clip_threshold: float = DEFAULT_CLIP,
    world_frame: bool = False,
) -> PointCloud:
    """Recover the ordered point cloud ``origin + direction * (depth * 2)``.

    Depths below ``clip_threshold`` are dropped along with the zero miss
    sentinel; pass ``clip_threshold=0`` for ground-truth arrays, keep the
    default for predicted arrays where small values are noise around the
    sentinel. With ``world_frame`` the unit-frame points are mapped through
    ``center + radius * p`` using the array's stored frame.
    """
    if len(depths) != model.n_rays:
        raise ValueError(
            f"model mismatch: array holds {len(depths)} depths, model casts {model.n_rays} rays"
        )
    if depths.model_id != model.model_id:
        raise ValueError("model mismatch: depth array was produced by a different arrangement")
    if clip_threshold < 0.0:
        raise ValueError("clip threshold must be non-negative")
    v = depths.values
    keep = (v > MISS) & (v >= clip_threshold)
    idx = np.flatnonzero(keep)
    pts = model.ray_origins[idx] + model.ray_directions[idx] * (DEPTH_SCALE * v[idx, None])
    if world_frame:
        pts = depths.frame.center + depths.frame.radius * pts
    return PointCloud(pts, ray_index=idx)


def ordered_correspondence(a: PointCloud, b: PointCloud) -> np.ndarray:
    """Pairs of positional indices ``(i_a, i_b)`` whose points came from the
    same ray, shape ``(k, 2)``, ordered by ray index."""
    if a.ray_index is None or b.ray_index is None:
        raise ValueError("ordered correspondence needs clouds that carry ray indices")
    _, ia, ib = np.intersect1d(a.ray_index, b.ray_index, assume_unique=True, return_indices=True)
    return np.column_stack([ia, ib])
