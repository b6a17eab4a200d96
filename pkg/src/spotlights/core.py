"""Shared geometric types: triangle meshes, bounding volumes, point clouds.

Conventions used across the package:

* Points and vectors are ``float64`` numpy arrays, shape ``(3,)`` for a single
  point and ``(n, 3)`` for batches.
* Container types are immutable after construction; the arrays they hold are
  marked read-only so instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeometryError",
    "Ray",
    "TriangleMesh",
    "BoundingSphere",
    "PointCloud",
    "DEGENERATE_AREA",
    "UNIT_TOL",
    "bounding_box",
    "bounding_sphere",
    "normalize_to_unit_sphere",
    "triangle_areas",
]

# Triangles with area at or below this are dropped at mesh construction.
DEGENERATE_AREA = 1e-12

# Tolerance for "unit length" checks on directions.
UNIT_TOL = 1e-9


class GeometryError(ValueError):
    """Raised when geometric input violates an operation's preconditions."""


def _frozen(a) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.setflags(write=False)
    return out


def _check_points(a: np.ndarray, name: str) -> np.ndarray:
    if a.ndim != 2 or a.shape[1] != 3:
        raise GeometryError(f"{name} must have shape (n, 3), got {a.shape}")
    if not np.isfinite(a).all():
        raise GeometryError(f"{name} contain non-finite coordinates")
    return a


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Areas of the given triangles, shape ``(m,)``."""
    v = vertices[triangles]
    cross = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


@dataclass(frozen=True)
class Ray:
    """A ray with unit direction; ``t`` parameters are therefore distances."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = _frozen(np.asarray(self.origin, dtype=np.float64).reshape(3))
        d = _frozen(np.asarray(self.direction, dtype=np.float64).reshape(3))
        n = np.linalg.norm(d)
        if abs(n - 1.0) > UNIT_TOL:
            raise GeometryError(f"ray direction must be unit length, |d| = {n!r}")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle soup.

    Parameters
    ----------
    vertices : (n, 3) float array
    triangles : (m, 3) int array of vertex indices

    Zero-area triangles (area <= ``DEGENERATE_AREA``) are dropped on
    construction; the number removed is kept in ``dropped_degenerate`` so
    callers can notice silently repaired input.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    dropped_degenerate: int = field(default=0, compare=False)

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=np.float64)
        _check_points(verts, "vertices")
        tris = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if tris.size == 0:
            tris = tris.reshape(0, 3)
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise GeometryError(f"triangles must have shape (m, 3), got {tris.shape}")
        if tris.size:
            if tris.min() < 0 or tris.max() >= len(verts):
                raise GeometryError("triangle index out of range")
            areas = triangle_areas(verts, tris)
            keep = areas > DEGENERATE_AREA
            dropped = int(np.count_nonzero(~keep))
            if dropped:
                tris = tris[keep]
        else:
            dropped = 0
        tris.setflags(write=False)
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "dropped_degenerate", dropped)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_corners(self) -> np.ndarray:
        """Per-triangle corner coordinates, shape ``(m, 3, 3)``."""
        return self.vertices[self.triangles]


@dataclass(frozen=True)
class BoundingSphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _frozen(np.asarray(self.center, dtype=np.float64).reshape(3))
        r = float(self.radius)
        if not np.isfinite(c).all() or not np.isfinite(r):
            raise GeometryError("bounding sphere must be finite")
        if r <= 0.0:
            raise GeometryError(f"bounding sphere radius must be positive, got {r!r}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    def contains(self, points: np.ndarray, slack: float = UNIT_TOL) -> bool:
        d = np.linalg.norm(np.asarray(points, dtype=np.float64) - self.center, axis=-1)
        return bool(np.all(d <= self.radius * (1.0 + slack)))


UNIT_SPHERE = BoundingSphere(np.zeros(3), 1.0)


@dataclass(frozen=True)
class PointCloud:
    """Unordered points, optionally tagged with the ray index that produced
    each point (an ordered cloud; indices strictly increasing)."""

    points: np.ndarray
    ray_index: np.ndarray | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        _check_points(pts, "points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.ray_index is not None:
            idx = np.ascontiguousarray(self.ray_index, dtype=np.int64)
            if idx.shape != (len(pts),):
                raise GeometryError("ray_index must have one entry per point")
            if idx.size and (np.diff(idx) <= 0).any():
                raise GeometryError("ray_index must be strictly increasing")
            idx.setflags(write=False)
            object.__setattr__(self, "ray_index", idx)

    def __len__(self) -> int:
        return len(self.points)


def bounding_box(mesh: TriangleMesh) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounding box of the mesh vertices, ``(min, max)``."""
    if mesh.n_vertices == 0:
        raise GeometryError("empty geometry")
    return mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)


def bounding_sphere(mesh: TriangleMesh) -> BoundingSphere:
    """Sphere circumscribing the axis-aligned bounding box.

    Not the minimal enclosing sphere: center is the box midpoint and the
    radius is half the box diagonal, which keeps the frame reproducible from
    the box alone.
    """
    lo, hi = bounding_box(mesh)
    radius = 0.5 * float(np.linalg.norm(hi - lo))
    if radius <= 0.0:
        raise GeometryError("degenerate bounding sphere: mesh has no spatial extent")
    return BoundingSphere(0.5 * (lo + hi), radius)


def normalize_to_unit_sphere(mesh: TriangleMesh, sphere: BoundingSphere) -> TriangleMesh:
    """Map vertices through ``v -> (v - center) / radius``.

    With ``sphere = bounding_sphere(mesh)`` the result fits the unit ball
    centered at the origin.
    """
    scaled = (mesh.vertices - sphere.center) / sphere.radius
    return TriangleMesh(scaled, mesh.triangles)
