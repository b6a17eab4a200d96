"""Procedural watertight test shapes and mesh surface sampling.

Besides the basic primitives (cube, icosphere, torus) there are generic
generators for surfaces of revolution and extruded polygons, and a few
household-flavored fixtures built from them: an irregular convex slab, an
L-bracket, and open-top cabinet columns with deep pockets. `fixture_corpus`
bundles the standard benchmark set. Everything is deterministic (seeded
where randomness is involved).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import ConvexHull

from .core import PointCloud, TriangleMesh

__all__ = [
    "cube",
    "icosphere",
    "torus",
    "bumpy_sphere",
    "random_convex",
    "revolve_profile",
    "extrude_polygon",
    "irregular_slab",
    "l_bracket",
    "cabinet",
    "fixture_corpus",
    "sample_surface",
]


def cube(size: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned cube with the given edge length."""
    h = 0.5 * size
    c = np.asarray(center, dtype=np.float64)
    corners = np.array(
        [[x, y, z] for x in (-h, h) for y in (-h, h) for z in (-h, h)]
    ) + c
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    tris = []
    for a, b, cc, d in quads:
        tris.append((a, b, cc))
        tris.append((a, cc, d))
    return TriangleMesh(corners, np.asarray(tris))


_ICO_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        (-1, _ICO_T, 0), (1, _ICO_T, 0), (-1, -_ICO_T, 0), (1, -_ICO_T, 0),
        (0, -1, _ICO_T), (0, 1, _ICO_T), (0, -1, -_ICO_T), (0, 1, -_ICO_T),
        (_ICO_T, 0, -1), (_ICO_T, 0, 1), (-_ICO_T, 0, -1), (-_ICO_T, 0, 1),
    ],
    dtype=np.float64,
)
_ICO_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
)


def icosphere(subdivisions: int = 3, radius: float = 0.5, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Subdivided icosahedron projected onto a sphere."""
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(subdivisions):
        midpoint_cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in midpoint_cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                midpoint_cache[key] = len(verts) - 1
            return midpoint_cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.asarray(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriangleMesh(v, np.asarray(faces))


def torus(
    major_radius: float = 0.7,
    minor_radius: float = 0.28,
    n_major: int = 48,
    n_minor: int = 24,
) -> TriangleMesh:
    """Torus around the z axis, triangulated from a wrapped quad grid."""
    u = 2.0 * np.pi * np.arange(n_major) / n_major
    v = 2.0 * np.pi * np.arange(n_minor) / n_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major_radius + minor_radius * np.cos(vv)
    verts = np.column_stack(
        [
            (ring * np.cos(uu)).ravel(),
            (ring * np.sin(uu)).ravel(),
            (minor_radius * np.sin(vv)).ravel(),
        ]
    )
    tris = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            tris.append((a, b, c))
            tris.append((a, c, d))
    return TriangleMesh(verts, np.asarray(tris))


def bumpy_sphere(
    subdivisions: int = 3,
    radius: float = 1.0,
    amplitude: float = 0.25,
    lobes: tuple[int, int] = (3, 4),
) -> TriangleMesh:
    """Star-shaped concave blob: an icosphere with a smooth radial modulation
    ``r(theta, phi) = radius * (1 + amplitude * sin(l0*theta) * cos(l1*phi))``."""
    base = icosphere(subdivisions, radius=1.0)
    v = base.vertices
    theta = np.arccos(np.clip(v[:, 2], -1.0, 1.0))
    phi = np.arctan2(v[:, 1], v[:, 0])
    scale = radius * (1.0 + amplitude * np.sin(lobes[0] * theta) * np.cos(lobes[1] * phi))
    return TriangleMesh(v * scale[:, None], base.triangles)


def random_convex(n_points: int = 64, seed: int = 7, radius: float = 1.0) -> TriangleMesh:
    """Convex hull of random points in a ball: an irregular convex fixture."""
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n_points, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= radius * rng.uniform(0.4, 1.0, size=(n_points, 1))
    hull = ConvexHull(pts)
    used = np.unique(hull.simplices)
    remap = np.full(n_points, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriangleMesh(pts[used], remap[hull.simplices])


def revolve_profile(profile, n_segments: int = 48, phase: float = 0.0, scales=None) -> TriangleMesh:
    """Revolve a closed ``(r, z)`` profile polyline around the z axis.

    The result is watertight as long as the profile stays off the axis
    (torus topology). Small ``n_segments`` values give prismatic solids:
    ``n_segments=4`` with ``phase=pi/4`` produces an axis-aligned square
    cross-section. ``scales`` optionally multiplies the profile radii per
    segment, which turns symmetric solids into irregular ones.
    """
    profile = np.asarray(profile, dtype=np.float64)
    if profile.ndim != 2 or profile.shape[1] != 2 or len(profile) < 3:
        raise ValueError("profile must be a closed polyline of (r, z) pairs")
    if profile[:, 0].min() <= 0.0:
        raise ValueError("profile radii must stay strictly positive")
    n_prof = len(profile)
    phi = phase + 2.0 * np.pi * np.arange(n_segments) / n_segments
    scales = np.ones(n_segments) if scales is None else np.asarray(scales, dtype=np.float64)
    if scales.shape != (n_segments,):
        raise ValueError("scales must provide one factor per segment")
    verts = []
    for k, ph in enumerate(phi):
        r = profile[:, 0] * scales[k]
        verts.append(np.column_stack([r * np.cos(ph), r * np.sin(ph), profile[:, 1]]))
    tris = []
    for i in range(n_segments):
        for j in range(n_prof):
            a = i * n_prof + j
            b = ((i + 1) % n_segments) * n_prof + j
            c = ((i + 1) % n_segments) * n_prof + (j + 1) % n_prof
            d = i * n_prof + (j + 1) % n_prof
            tris.append((a, b, c))
            tris.append((a, c, d))
    return TriangleMesh(np.concatenate(verts), np.asarray(tris))


def _ear_clip(poly: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate a simple CCW polygon by ear clipping."""

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    idx = list(range(len(poly)))
    tris = []
    while len(idx) > 3:
        n = len(idx)
        for k in range(n):
            i0, i1, i2 = idx[(k - 1) % n], idx[k], idx[(k + 1) % n]
            a, b, c = poly[i0], poly[i1], poly[i2]
            if cross(a, b, c) <= 1e-12:
                continue  # reflex or collinear corner, not an ear
            if any(
                cross(a, b, poly[j]) >= -1e-12
                and cross(b, c, poly[j]) >= -1e-12
                and cross(c, a, poly[j]) >= -1e-12
                for j in idx
                if j not in (i0, i1, i2)
            ):
                continue
            tris.append((i0, i1, i2))
            idx.pop(k)
            break
        else:
            raise ValueError("polygon is not simple or not counterclockwise")
    tris.append((idx[0], idx[1], idx[2]))
    return tris


def extrude_polygon(polygon, z0: float, z1: float) -> TriangleMesh:
    """Extrude a simple CCW polygon along z into a capped, watertight prism."""
    poly = np.asarray(polygon, dtype=np.float64)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise ValueError("polygon must be a list of (x, y) pairs")
    if not z1 > z0:
        raise ValueError("need z1 > z0")
    n = len(poly)
    verts = np.vstack(
        [
            np.column_stack([poly, np.full(n, z0)]),
            np.column_stack([poly, np.full(n, z1)]),
        ]
    )
    tris = []
    for i in range(n):
        j = (i + 1) % n
        tris.append((i, j, n + j))
        tris.append((i, n + j, n + i))
    for a, b, c in _ear_clip(poly):
        tris.append((a, c, b))  # bottom cap faces down
        tris.append((n + a, n + b, n + c))
    return TriangleMesh(verts, np.asarray(tris))


def irregular_slab(seed: int = 5, jitter: float = 0.05, half_extents=(0.28, 0.62, 0.95)) -> TriangleMesh:
    """Irregular convex fixture: the hull of a box's eight corners after a
    random jitter, so its extremities stay near the bounding sphere."""
    rng = np.random.default_rng(seed)
    corners = np.array(
        [[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=np.float64
    )
    corners *= np.asarray(half_extents, dtype=np.float64)
    corners += rng.uniform(-jitter, jitter, corners.shape)
    hull = ConvexHull(corners)
    used = np.unique(hull.simplices)
    remap = np.full(len(corners), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriangleMesh(corners[used], remap[hull.simplices])


_L_POLYGON = [(-0.6, -0.6), (0.6, -0.6), (0.6, -0.15), (-0.15, -0.15), (-0.15, 0.6), (-0.6, 0.6)]


def l_bracket(half_height: float = 0.9) -> TriangleMesh:
    """Irregular concave fixture: a tall L-shaped prism whose notch faces one
    corner, so part of its surface is reachable only by oblique rays."""
    return extrude_polygon(_L_POLYGON, -half_height, half_height)


def cabinet(
    outer_half_width: float = 0.5,
    wall: float = 0.07,
    plug_half_height: float = 0.15,
    half_height: float = 1.0,
) -> TriangleMesh:
    """Tall square column with deep open pockets at both ends, like a
    two-sided cabinet. The pocket interiours sit far off-center, which makes
    narrow ray bundles (aimed at the sphere center) undersample them."""
    if not 0.0 < wall < outer_half_width:
        raise ValueError("wall thickness must be positive and below the outer half width")
    if not 0.0 < plug_half_height < half_height:
        raise ValueError("plug must be thinner than the column")
    w_out = outer_half_width * math.sqrt(2.0)  # corner radius of the square section
    w_in = (outer_half_width - wall) * math.sqrt(2.0)
    profile = [
        (0.05, -plug_half_height),
        (w_in, -plug_half_height),
        (w_in, -half_height),
        (w_out, -half_height),
        (w_out, half_height),
        (w_in, half_height),
        (w_in, plug_half_height),
        (0.05, plug_half_height),
    ]
    return revolve_profile(profile, n_segments=4, phase=math.pi / 4.0)


def fixture_corpus() -> dict[str, TriangleMesh]:
    """The standard benchmark corpus: the three primitives plus irregular
    convex/concave fixtures and two cabinet columns whose pockets make the
    ray-count and opening-angle trade-offs visible."""
    return {
        "cube": cube(1.0),
        "icosphere": icosphere(3, radius=0.5),
        "torus": torus(0.78, 0.09),
        "irregular_slab": irregular_slab(),
        "l_bracket": l_bracket(),
        "cabinet_slim": cabinet(outer_half_width=0.42, wall=0.06),
        "cabinet_wide": cabinet(),
    }


def sample_surface(mesh: TriangleMesh, n: int, seed=0) -> PointCloud:
    """``n`` points drawn uniformly from the mesh surface (area-weighted
    triangle choice, uniform barycentric placement). ``seed`` may be an int
    or a ``numpy.random.Generator``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    corners = mesh.triangle_corners()
    areas = 0.5 * np.linalg.norm(
        np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=1
    )
    tri = rng.choice(len(areas), size=n, p=areas / areas.sum())
    u = np.sqrt(rng.random(n))
    v = rng.random(n)
    a, b, c = corners[tri, 0], corners[tri, 1], corners[tri, 2]
    pts = (1.0 - u)[:, None] * a + (u * (1.0 - v))[:, None] * b + (u * v)[:, None] * c
    return PointCloud(pts)
