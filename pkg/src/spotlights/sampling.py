"""Deterministic quasi-uniform point sets on the unit sphere and on
spherical caps, via the Fibonacci lattice and its cylindrical equal-area
projection.

The 2D lattice places point ``i`` of ``n`` at ``(frac(i / PHI), i / n)``.
Mapping ``(x, y) -> (phi, theta) = (2*pi*x, arccos(1 - 2*y))`` spreads the
points evenly over the sphere; restricting the ``theta`` range to
``[0, omega]`` with the same equal-area rule yields cap bundles. Everything
here is a pure function of its arguments: equal inputs give bit-identical
outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GeometryError, UNIT_TOL

__all__ = [
    "PHI",
    "FibonacciLattice2D",
    "SphericalPointSet",
    "CapPointSet",
    "fibonacci_lattice",
    "sphere_points",
    "cap_points",
    "cap_frame",
    "opening_angle",
]

PHI = (1.0 + math.sqrt(5.0)) / 2.0  # golden ratio


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FibonacciLattice2D:
    n: int
    points: np.ndarray  # (n, 2) in [0, 1)^2


@dataclass(frozen=True)
class SphericalPointSet:
    n: int
    directions: np.ndarray  # (n, 3) unit vectors
    phi: np.ndarray  # azimuth in [0, 2*pi]
    theta: np.ndarray  # polar angle in [0, pi]


@dataclass(frozen=True)
class CapPointSet:
    m: int
    axis: np.ndarray  # unit cap axis
    max_polar_angle: float
    directions: np.ndarray  # (m, 3) unit vectors within max_polar_angle of axis


def fibonacci_lattice(n: int) -> FibonacciLattice2D:
    """Fibonacci lattice of ``n`` points in the unit square.

    Point ``i`` is ``(frac(i / PHI), i / n)``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("point count must be at least 1")
    i = np.arange(n, dtype=np.float64)
    x = np.mod(i / PHI, 1.0)
    y = i / n
    return FibonacciLattice2D(n, _freeze(np.column_stack([x, y])))


def _to_directions(phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    sin_t = np.sin(theta)
    return np.column_stack([sin_t * np.cos(phi), sin_t * np.sin(phi), np.cos(theta)])


def sphere_points(n: int) -> SphericalPointSet:
    """``n`` quasi-uniform unit vectors from the spherical Fibonacci map.

    The cylindrical equal-area projection ``theta = arccos(1 - 2*y)`` gives
    each point roughly ``4*pi/n`` of solid angle. Point 0 is always the +z
    pole.
    """
    lattice = fibonacci_lattice(n)
    x = lattice.points[:, 0]
    y = lattice.points[:, 1]
    phi = 2.0 * np.pi * x
    theta = np.arccos(1.0 - 2.0 * y)
    return SphericalPointSet(n, _freeze(_to_directions(phi, theta)), _freeze(phi), _freeze(theta))


def cap_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic tangent basis ``(t1, t2)`` completing ``axis``.

    ``t1 = normalize(axis x e)`` with reference ``e = +z``, switching to
    ``e = +x`` when ``|axis . z| > 0.9``; ``t2 = axis x t1``. The branch is
    stable so encodings are reproducible, but it also means cap point sets
    are only rotation-equivariant under rotations that keep the reference
    vector fixed.
    """
    axis = np.asarray(axis, dtype=np.float64).reshape(3)
    e = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) <= 0.9 else np.array([1.0, 0.0, 0.0])
    t1 = np.cross(axis, e)
    t1 = t1 / np.linalg.norm(t1)
    t2 = np.cross(axis, t1)
    return t1, t2


def cap_points(m: int, axis: np.ndarray, max_polar_angle: float) -> CapPointSet:
    """``m`` equal-area Fibonacci samples on the spherical cap around ``axis``.

    The cap of half-angle ``omega`` is sampled by restricting the cylindrical
    map to ``theta = arccos(1 - (1 - cos(omega)) * y)``; for
    ``omega = pi/2`` this recovers the full-hemisphere map. Point 0 is the
    cap pole (the axis itself).
    """
    m = int(m)
    if m < 1:
        raise ValueError("point count must be at least 1")
    omega = float(max_polar_angle)
    if not 0.0 < omega <= 0.5 * np.pi:
        raise ValueError(f"max polar angle must be in (0, pi/2], got {omega!r}")
    axis = np.asarray(axis, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(axis)
    if abs(norm - 1.0) > UNIT_TOL:
        raise GeometryError(f"cap axis must be unit length, |axis| = {norm!r}")
    axis = axis / norm

    lattice = fibonacci_lattice(m)
    phi = 2.0 * np.pi * lattice.points[:, 0]
    theta = np.arccos(1.0 - (1.0 - np.cos(omega)) * lattice.points[:, 1])
    local = _to_directions(phi, theta)

    t1, t2 = cap_frame(axis)
    world = local[:, 0:1] * t1 + local[:, 1:2] * t2 + local[:, 2:3] * axis
    return CapPointSet(m, _freeze(axis.copy()), omega, _freeze(world))


def opening_angle(r_small: float, big_radius: float) -> float:
    """Half-angle of the cap cut from a sphere of radius ``big_radius`` by a
    small sphere of radius ``r_small`` sitting on its surface:
    ``arccos(r_small / (2 * big_radius))``.

    A small sphere of a quarter the big radius opens the bundle to about 83
    degrees; equal radii give 60 degrees.
    """
    r_small = float(r_small)
    big_radius = float(big_radius)
    if big_radius <= 0.0:
        raise ValueError("outer radius must be positive")
    if r_small <= 0.0:
        raise ValueError("small-sphere radius must be positive")
    if r_small > 2.0 * big_radius:
        raise ValueError("small-sphere radius exceeds the sphere diameter: no cap is formed")
    return math.acos(r_small / (2.0 * big_radius))
