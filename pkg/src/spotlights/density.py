"""Ray-density analysis of the spherical sampling arrangement.

An idealized setup replaces the discrete arrangement with ray sources spread
uniformly over the unit sphere, each emitting uniformly into the inward
hemisphere. The expected number of rays received per unit area by a small
oriented patch (a surfel) inside the sphere then depends only on the surfel's
distance ``r`` from the center and its tilt ``alpha`` relative to the
center-to-surfel direction:

    rho(r, alpha) = NM / (8 pi^2) *
        integral d_theta d_phi  sin(theta) (cos(theta) - r cos(alpha)) / d^3,
    d^2 = r^2 - 2 r (cos(alpha) cos(theta) - sin(alpha) sin(theta) cos(phi)) + 1

where the integrand is clamped at zero: source directions behind an opaque
surfel contribute nothing. The clamp is what makes the center value come out
to ``1/(8 pi)``, anchoring the overall scale. With one blocked direction
``(beta, gamma)`` the per-direction density collapses to the closed form
``cos(beta) / sqrt(xi r^2 + 1)`` with
``xi = (sin(alpha) sin(beta) cos(gamma) - cos(alpha) cos(beta))^2 - 1``.

This module evaluates the integral numerically (midpoint rule), the occluded
closed form directly, and cross-checks both against a seeded Monte-Carlo
simulation of the idealized setup. All densities are reported with the
``NM`` constant set to 1 unless scaled explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SurfelParams",
    "OcclusionParams",
    "DensityProfile",
    "density_free",
    "density_occluded",
    "density_profile",
    "density_monte_carlo",
    "DEFAULT_RESOLUTION",
]

DEFAULT_RESOLUTION = (512, 1024)  # (theta, phi) quadrature grid
MIN_RESOLUTION = 64
_SCALE = 1.0 / (8.0 * math.pi**2)


@dataclass(frozen=True)
class SurfelParams:
    """Oriented patch inside the unit sphere: distance ``r`` from the center
    in ``[0, 1)`` and tilt ``alpha`` in ``[0, pi]`` between the patch normal
    and the center-to-patch direction."""

    r: float
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise ValueError(f"surfel distance r must be in [0, 1), got {self.r!r}")
        if not 0.0 <= self.alpha <= math.pi:
            raise ValueError(f"surfel tilt alpha must be in [0, pi], got {self.alpha!r}")


@dataclass(frozen=True)
class OcclusionParams:
    """One blocked direction as seen from the surfel, polar ``beta`` in
    ``[0, pi)`` and azimuth ``gamma`` in ``[0, 2 pi)``."""

    beta: float
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.beta < math.pi:
            raise ValueError(f"beta must be in [0, pi), got {self.beta!r}")
        if not 0.0 <= self.gamma < 2.0 * math.pi:
            raise ValueError(f"gamma must be in [0, 2*pi), got {self.gamma!r}")


@dataclass(frozen=True)
class DensityProfile:
    """Sampled density over a ``(r, alpha)`` grid (``rho[i, j]`` belongs to
    ``r[i], alpha[j]``), scaled by the source-times-rays constant ``nm``."""

    r: np.ndarray
    alpha: np.ndarray
    rho: np.ndarray
    nm: float = 1.0

    def to_csv(self, path, monte_carlo: np.ndarray | None = None) -> None:
        """Write ``r,alpha,rho[,rho_mc]`` rows for plotting."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write("r,alpha,rho" + (",rho_mc" if monte_carlo is not None else "") + "\n")
            for i, r in enumerate(self.r):
                for j, a in enumerate(self.alpha):
                    row = f"{r:.12g},{a:.12g},{self.rho[i, j]:.12g}"
                    if monte_carlo is not None:
                        row += f",{monte_carlo[i, j]:.12g}"
                    fh.write(row + "\n")


def _check_resolution(resolution) -> tuple[int, int]:
    n_theta, n_phi = (int(resolution[0]), int(resolution[1]))
    if n_theta < MIN_RESOLUTION or n_phi < MIN_RESOLUTION:
        raise ValueError(f"quadrature resolution must be at least {MIN_RESOLUTION} per axis")
    return n_theta, n_phi


def density_free(surfel: SurfelParams, resolution=DEFAULT_RESOLUTION, nm: float = 1.0) -> float:
    """Occlusion-free ray density by midpoint quadrature over the sphere of
    source directions. Converges well within 1e-4 at the default resolution
    for ``r <= 0.8``."""
    n_theta, n_phi = _check_resolution(resolution)
    r, alpha = surfel.r, surfel.alpha
    d_theta = math.pi / n_theta
    d_phi = 2.0 * math.pi / n_phi
    theta = (np.arange(n_theta) + 0.5) * d_theta
    phi = (np.arange(n_phi) + 0.5) * d_phi
    sin_t = np.sin(theta)
    cos_t = np.cos(theta)
    # Visibility clamp: sources behind the surfel plane contribute nothing.
    numerator = sin_t * np.maximum(cos_t - r * math.cos(alpha), 0.0)
    a = r * r + 1.0 - 2.0 * r * math.cos(alpha) * cos_t
    b = 2.0 * r * math.sin(alpha) * sin_t
    d2 = a[:, None] + b[:, None] * np.cos(phi)[None, :]
    integrand = numerator[:, None] / (d2 * np.sqrt(d2))
    return float(nm * _SCALE * integrand.sum() * d_theta * d_phi)


def density_occluded(surfel: SurfelParams, occlusion: OcclusionParams, nm: float = 1.0) -> float:
    """Closed-form ray density contributed by a single source direction
    ``(beta, gamma)``; zero at or beyond grazing incidence. Continuous in
    both angles, which is what keeps partially occluded surfels sampled."""
    cos_b = math.cos(occlusion.beta)
    if cos_b <= 0.0:
        return 0.0
    u = (
        math.sin(surfel.alpha) * math.sin(occlusion.beta) * math.cos(occlusion.gamma)
        - math.cos(surfel.alpha) * cos_b
    )
    xi = u * u - 1.0  # in [-1, 0]
    denom_sq = xi * surfel.r**2 + 1.0
    assert denom_sq > 0.0, "xi*r^2 + 1 must stay positive for r < 1"
    return nm * _SCALE * cos_b / math.sqrt(denom_sq)


def density_profile(
    r_steps: int,
    alpha_steps: int,
    resolution=DEFAULT_RESOLUTION,
    r_max: float = 0.8,
    nm: float = 1.0,
) -> DensityProfile:
    """Occlusion-free density sampled on a uniform ``(r, alpha)`` grid with
    ``r`` in ``[0, r_max]`` and ``alpha`` in ``[0, pi]``."""
    if r_steps < 2 or alpha_steps < 2:
        raise ValueError("profile needs at least 2 steps per axis")
    if not 0.0 < r_max < 1.0:
        raise ValueError(f"r_max must be in (0, 1), got {r_max!r}")
    rs = np.linspace(0.0, r_max, r_steps)
    alphas = np.linspace(0.0, math.pi, alpha_steps)
    rho = np.empty((r_steps, alpha_steps))
    for i, r in enumerate(rs):
        for j, a in enumerate(alphas):
            rho[i, j] = density_free(SurfelParams(float(r), float(a)), resolution, nm)
    return DensityProfile(rs, alphas, rho, nm)


def density_monte_carlo(
    surfel: SurfelParams,
    n_sources: int,
    m_rays: int,
    seed: int,
    surfel_area: float = 0.02,
) -> float:
    """Seeded simulation of the idealized setup: ``n_sources`` uniform on the
    sphere, ``m_rays`` each, uniform over the inward hemisphere. Counts rays
    crossing the front face of a small disc at the surfel and returns
    ``count / (area * n_sources * m_rays)``.

    Agrees with `density_free` within a few percent for ``r <= 0.6`` once
    ``n_sources * m_rays`` reaches ~1e5; bit-reproducible for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    center = np.array([0.0, 0.0, surfel.r])
    normal = np.array([math.sin(surfel.alpha), 0.0, math.cos(surfel.alpha)])
    disc_radius = math.sqrt(surfel_area / math.pi)

    hits = 0
    chunk = max(1, min(n_sources, 200_000 // max(m_rays, 1) + 1))
    for start in range(0, n_sources, chunk):
        n = min(chunk, n_sources - start)
        src = rng.normal(size=(n, 3))
        src /= np.linalg.norm(src, axis=1, keepdims=True)
        d = rng.normal(size=(n, m_rays, 3))
        d /= np.linalg.norm(d, axis=2, keepdims=True)
        # Fold directions into the inward hemisphere of each source.
        outward = np.sum(d * src[:, None, :], axis=2) > 0.0
        d[outward] = -d[outward]

        denom = d @ normal
        numer = (center - src) @ normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t = numer[:, None] / denom
        crossing = (denom < 0.0) & (t > 0.0)  # front-face crossings only
        q = src[:, None, :] + t[:, :, None] * d - center
        inside = np.einsum("ijk,ijk->ij", q, q) <= disc_radius**2
        hits += int(np.count_nonzero(crossing & inside))
    return hits / (surfel_area * n_sources * m_rays)
