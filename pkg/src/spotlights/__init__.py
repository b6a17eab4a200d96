"""Spotlights: a spherical ray-bundle shape representation.

A fixed arrangement of viewpoints on a sphere, each casting a bundle of rays
inward, turns any mesh fitted into the unit ball into a compact 1D array of
depths. Decoding the array reproduces an ordered point cloud with stable
per-ray correspondences. The package also ships the evaluation metrics
(Chamfer distance, accuracy, completeness, hit ratio, consistency) and the
ray-density analysis used to argue that the sampling covers surfaces evenly.
"""

from .core import (
    BoundingSphere,
    GeometryError,
    PointCloud,
    Ray,
    TriangleMesh,
    bounding_box,
    bounding_sphere,
    normalize_to_unit_sphere,
)
from .density import (
    DensityProfile,
    OcclusionParams,
    SurfelParams,
    density_free,
    density_monte_carlo,
    density_occluded,
    density_profile,
)
from .io_formats import (
    ParseError,
    SplFormatError,
    SplHeader,
    load_cloud,
    load_mesh,
    read_spl,
    save_cloud,
    save_mesh,
    write_spl,
)
from .metrics import (
    MetricError,
    MetricReport,
    accuracy,
    chamfer,
    completeness,
    consistency,
    hit_ratio,
    nearest_neighbor_distances,
)
from .model import (
    DepthArray,
    SpotlightsModel,
    build_model,
    decode,
    encode,
    model_digest,
    ordered_correspondence,
)
from .raycast import (
    Bvh,
    HitRecord,
    build_bvh,
    first_hit,
    first_hit_batch,
    first_hit_bruteforce,
)
from .sampling import (
    CapPointSet,
    FibonacciLattice2D,
    SphericalPointSet,
    cap_points,
    fibonacci_lattice,
    opening_angle,
    sphere_points,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingSphere", "GeometryError", "PointCloud", "Ray", "TriangleMesh",
    "bounding_box", "bounding_sphere", "normalize_to_unit_sphere",
    "FibonacciLattice2D", "SphericalPointSet", "CapPointSet",
    "fibonacci_lattice", "sphere_points", "cap_points", "opening_angle",
    "Bvh", "HitRecord", "build_bvh", "first_hit", "first_hit_batch",
    "first_hit_bruteforce",
    "SpotlightsModel", "DepthArray", "build_model", "encode", "decode",
    "ordered_correspondence", "model_digest",
    "MetricError", "MetricReport", "accuracy", "chamfer", "completeness",
    "consistency", "hit_ratio", "nearest_neighbor_distances",
    "SurfelParams", "OcclusionParams", "DensityProfile",
    "density_free", "density_occluded", "density_profile", "density_monte_carlo",
    "SplFormatError", "ParseError", "SplHeader",
    "read_spl", "write_spl", "load_mesh", "save_mesh", "load_cloud", "save_cloud",
    "__version__",
]
