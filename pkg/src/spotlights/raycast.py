"""First-hit ray casting against triangle meshes.

A flat BVH (median split on the longest box axis, leaves of at most four
triangles) accelerates first-hit queries, and a brute-force scan over all
triangles serves as the reference oracle. All routes share one vectorized
Moller-Trumbore kernel, so hit distances agree bit-for-bit between the
accelerated and exhaustive paths, and results do not depend on how rays are
batched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GeometryError, Ray, TriangleMesh

__all__ = [
    "Bvh",
    "HitRecord",
    "build_bvh",
    "first_hit",
    "first_hit_batch",
    "first_hit_bruteforce",
    "ray_triangle_t",
]

# |det| at or below this means the ray is treated as parallel to the triangle.
PARALLEL_EPS = 1e-12
# Barycentric boundary inclusive within this, so a ray crossing a shared edge
# reports at least one of the adjacent triangles instead of leaking through.
BARY_EPS = 1e-9
# Node boxes are padded so slab tests stay conservative under roundoff.
BOX_PAD = 1e-9
LEAF_SIZE = 4


@dataclass(frozen=True)
class HitRecord:
    t: float
    triangle_index: int
    point: np.ndarray


@dataclass(frozen=True)
class Bvh:
    """Flat bounding-volume hierarchy over mesh triangles.

    ``left/right`` are child node ids (-1 marks a leaf); leaves reference the
    slice ``tri_order[start : start + count]`` of reordered triangle ids.
    """

    bounds_min: np.ndarray
    bounds_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    tri_order: np.ndarray
    n_triangles: int

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0


def build_bvh(mesh: TriangleMesh, leaf_size: int = LEAF_SIZE) -> Bvh:
    """Deterministic median-split BVH over the mesh triangles."""
    n_tris = mesh.n_triangles
    if n_tris == 0:
        raise GeometryError("empty geometry")
    corners = mesh.triangle_corners()
    tri_min = corners.min(axis=1)
    tri_max = corners.max(axis=1)
    centroids = 0.5 * (tri_min + tri_max)

    bmin, bmax, left, right, start, count = [], [], [], [], [], []
    order: list[np.ndarray] = []
    n_ordered = 0

    def make_node(idx: np.ndarray) -> int:
        nonlocal n_ordered
        node = len(bmin)
        bmin.append(tri_min[idx].min(axis=0) - BOX_PAD)
        bmax.append(tri_max[idx].max(axis=0) + BOX_PAD)
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        if len(idx) <= leaf_size:
            start[node] = n_ordered
            count[node] = len(idx)
            order.append(idx)
            n_ordered += len(idx)
        else:
            axis = int(np.argmax(bmax[node] - bmin[node]))
            srt = idx[np.argsort(centroids[idx, axis], kind="stable")]
            mid = len(srt) // 2
            left[node] = make_node(srt[:mid])
            right[node] = make_node(srt[mid:])
        return node

    make_node(np.arange(n_tris, dtype=np.int64))
    return Bvh(
        bounds_min=np.asarray(bmin),
        bounds_max=np.asarray(bmax),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        start=np.asarray(start, dtype=np.int64),
        count=np.asarray(count, dtype=np.int64),
        tri_order=np.concatenate(order),
        n_triangles=n_tris,
    )


def ray_triangle_t(origins, directions, v0, v1, v2, backface_cull: bool = False):
    """Moller-Trumbore hit parameter for broadcastable ray/triangle arrays.

    Returns ``t`` with ``inf`` where there is no hit. Both triangle faces
    intersect unless ``backface_cull`` is set (winding in the wild is too
    inconsistent to cull by default).
    """
    edge1 = v1 - v0
    edge2 = v2 - v0
    pvec = np.cross(directions, edge2)
    det = np.sum(edge1 * pvec, axis=-1)
    valid = det > PARALLEL_EPS if backface_cull else np.abs(det) > PARALLEL_EPS
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inv = 1.0 / det
        tvec = origins - v0
        u = np.sum(tvec * pvec, axis=-1) * inv
        qvec = np.cross(tvec, edge1)
        v = np.sum(directions * qvec, axis=-1) * inv
        t = np.sum(edge2 * qvec, axis=-1) * inv
        ok = (
            valid
            & (u >= -BARY_EPS)
            & (v >= -BARY_EPS)
            & (u + v <= 1.0 + BARY_EPS)
            & np.isfinite(t)
        )
    return np.where(ok, t, np.inf)


def _slab_interval(node_min, node_max, o, inv):
    """Entry/exit parameters of rays against one box; handles axes where the
    direction component is zero (origin inside the slab or a sure miss)."""
    t1 = (node_min - o) * inv
    t2 = (node_max - o) * inv
    near = np.fmin(t1, t2)
    far = np.fmax(t1, t2)
    flat = ~np.isfinite(inv)
    if flat.any():
        inside = (o >= node_min) & (o <= node_max)
        near = np.where(flat, np.where(inside, -np.inf, np.inf), near)
        far = np.where(flat, np.where(inside, np.inf, -np.inf), far)
    return near.max(axis=1), far.min(axis=1)


def first_hit_batch(
    bvh: Bvh,
    mesh: TriangleMesh,
    origins: np.ndarray,
    directions: np.ndarray,
    t_min: float = 0.0,
    t_max: float = np.inf,
) -> tuple[np.ndarray, np.ndarray]:
    """First hits for many rays at once.

    Returns ``(t, triangle_index)`` arrays; misses hold ``inf`` and ``-1``.
    Hits satisfy ``t_min < t <= t_max``. Results are identical to per-ray
    `first_hit` regardless of how rays are grouped.
    """
    if t_min < 0.0 or not t_max > t_min:
        raise ValueError("require 0 <= t_min < t_max")
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    directions = np.ascontiguousarray(directions, dtype=np.float64)
    n_rays = len(origins)
    best_t = np.full(n_rays, np.inf)
    best_tri = np.full(n_rays, -1, dtype=np.int64)
    if n_rays == 0:
        return best_t, best_tri

    with np.errstate(divide="ignore"):
        inv_dir = 1.0 / directions
    corners = mesh.triangle_corners()

    # Fixed left-then-right DFS: the traversal order per ray is independent of
    # batching, so tie-breaking between equal-t triangles is deterministic.
    stack: list[tuple[int, np.ndarray]] = [(0, np.arange(n_rays))]
    while stack:
        node, rays = stack.pop()
        o = origins[rays]
        near, far = _slab_interval(bvh.bounds_min[node], bvh.bounds_max[node], o, inv_dir[rays])
        limit = np.minimum(best_t[rays], t_max)
        alive = (near <= far) & (far > t_min) & (near <= limit)
        if not alive.any():
            continue
        rays = rays[alive]
        if bvh.is_leaf(node):
            s, c = bvh.start[node], bvh.count[node]
            tris = bvh.tri_order[s : s + c]
            tv = corners[tris]
            ts = ray_triangle_t(
                origins[rays, None, :],
                directions[rays, None, :],
                tv[None, :, 0],
                tv[None, :, 1],
                tv[None, :, 2],
            )
            ts = np.where((ts > t_min) & (ts <= t_max), ts, np.inf)
            j = np.argmin(ts, axis=1)
            t_cand = ts[np.arange(len(rays)), j]
            better = t_cand < best_t[rays]
            upd = rays[better]
            best_t[upd] = t_cand[better]
            best_tri[upd] = tris[j[better]]
        else:
            stack.append((int(bvh.right[node]), rays))
            stack.append((int(bvh.left[node]), rays))
    return best_t, best_tri


def first_hit(
    bvh: Bvh,
    mesh: TriangleMesh,
    ray: Ray,
    t_min: float = 0.0,
    t_max: float = np.inf,
) -> HitRecord | None:
    """Closest intersection with ``t_min < t <= t_max``, or ``None``."""
    t, tri = first_hit_batch(bvh, mesh, ray.origin[None, :], ray.direction[None, :], t_min, t_max)
    if tri[0] < 0:
        return None
    return HitRecord(float(t[0]), int(tri[0]), ray.at(float(t[0])))


def first_hit_bruteforce(
    mesh: TriangleMesh,
    ray: Ray,
    t_min: float = 0.0,
    t_max: float = np.inf,
) -> HitRecord | None:
    """Reference first hit by exhaustive iteration over every triangle."""
    if t_min < 0.0 or not t_max > t_min:
        raise ValueError("require 0 <= t_min < t_max")
    if mesh.n_triangles == 0:
        return None
    corners = mesh.triangle_corners()
    ts = ray_triangle_t(
        ray.origin[None, :],
        ray.direction[None, :],
        corners[:, 0],
        corners[:, 1],
        corners[:, 2],
    )
    ts = np.where((ts > t_min) & (ts <= t_max), ts, np.inf)
    i = int(np.argmin(ts))
    if not np.isfinite(ts[i]):
        return None
    return HitRecord(float(ts[i]), i, ray.at(float(ts[i])))
