"""Named analytic target densities on the grid cube.

Each builder returns a GridDensity over [-1,1]^dims (renormalized on the
grid).  Gaussian families with unbounded support are truncated to a hypercube
and rescaled; the affine map is recorded on the density.  TARGET_FAMILIES maps
config names to builders for the command-line driver.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError
from .target_maps import GridDensity, build_grid_density, truncate_density


def uniform_1d(resolution: int | None = None) -> GridDensity:
    return build_grid_density(lambda p: np.ones(p.shape[0]), 1, resolution)


def bimodal_1d(centers=(-0.5, 0.5), widths=(0.15, 0.15), mix=(0.5, 0.5),
               resolution: int | None = None) -> GridDensity:
    """Two-component Gaussian mixture on [-1,1], renormalized on the grid."""
    centers = np.asarray(centers, dtype=float)
    widths = np.asarray(widths, dtype=float)
    mix = np.asarray(mix, dtype=float)
    if np.any(widths <= 0) or np.any(mix < 0) or mix.sum() <= 0:
        raise ValidationError("widths must be positive and mixture weights nonnegative")
    mix = mix / mix.sum()

    def pdf(pts: np.ndarray) -> np.ndarray:
        y = pts[:, 0]
        out = np.zeros_like(y)
        for c, w, a in zip(centers, widths, mix):
            out += a * np.exp(-0.5 * ((y - c) / w) ** 2) / (w * math.sqrt(2 * math.pi))
        return out

    return build_grid_density(pdf, 1, resolution)


def step_1d(split: float = 0.0, low: float = 0.25, high: float = 1.75,
            resolution: int | None = None) -> GridDensity:
    """Piecewise-constant density: `low` below split, `high` above."""

    def pdf(pts: np.ndarray) -> np.ndarray:
        return np.where(pts[:, 0] < split, low, high)

    return build_grid_density(pdf, 1, resolution)


def gaussian_nd(dims: int, rho: float = 0.7, radius: float = 3.0,
                resolution: int | None = None) -> GridDensity:
    """Equicorrelated unit-variance Gaussian truncated to [-radius, radius]^dims.

    Covariance (1-rho) I + rho J; requires -1/(dims-1) < rho < 1 for positive
    definiteness.
    """
    if dims < 1:
        raise ValidationError(f"dims must be >= 1, got {dims}")
    if dims > 1 and not -1.0 / (dims - 1) < rho < 1.0:
        raise ValidationError(f"rho {rho} outside the positive-definite range")
    cov = (1.0 - rho) * np.eye(dims) + rho * np.ones((dims, dims))
    if dims == 1:
        cov = np.eye(1)
    prec = np.linalg.inv(cov)

    def pdf(pts: np.ndarray) -> np.ndarray:
        return np.exp(-0.5 * np.einsum("ni,ij,nj->n", pts, prec, pts))

    # truncate_density wants integer half-width; route through the same affine
    # bookkeeping with the exact radius instead.
    scale = float(radius)

    def unit_pdf(pts: np.ndarray) -> np.ndarray:
        return pdf(pts * scale)

    return build_grid_density(
        unit_pdf, dims, resolution,
        affine_shift=np.zeros(dims), affine_scale=np.full(dims, scale),
    )


def product_gaussians_2d(sigmas=(0.4, 0.25), resolution: int | None = None) -> GridDensity:
    """Independent centered Gaussian marginals on [-1,1]^2 (zero correlation)."""
    s = np.asarray(sigmas, dtype=float)
    if s.shape != (2,) or np.any(s <= 0):
        raise ValidationError("sigmas must be two positive values")

    def pdf(pts: np.ndarray) -> np.ndarray:
        return np.exp(-0.5 * ((pts[:, 0] / s[0]) ** 2 + (pts[:, 1] / s[1]) ** 2))

    return build_grid_density(pdf, 2, resolution)


def dirichlet_projected(alphas=(2.0, 2.0, 2.0, 2.0),
                        resolution: int | None = None) -> GridDensity:
    """Dirichlet(alphas) over its first len(alphas)-1 coordinates.

    The last simplex coordinate is 1 minus the rest, so the density over the
    free coordinates is prod y_m^(a_m - 1) * (1 - sum y_m)^(a_last - 1) on the
    simplex and 0 outside.  alphas >= 1 keeps it bounded (no corner blowup).
    """
    a = np.asarray(alphas, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise ValidationError("alphas must be a vector with at least 2 entries")
    if np.any(a < 1.0):
        raise ValidationError("alphas below 1 put unbounded mass at the boundary")
    dims = a.size - 1

    def pdf(pts: np.ndarray) -> np.ndarray:
        head = pts
        rest = 1.0 - head.sum(axis=1)
        inside = np.all(head >= 0.0, axis=1) & (rest >= 0.0)
        out = np.zeros(pts.shape[0])
        if not inside.any():
            return out
        h = np.clip(head[inside], 1e-300, None)
        r = np.clip(rest[inside], 1e-300, None)
        log_p = ((a[:-1] - 1.0) * np.log(h)).sum(axis=1) + (a[-1] - 1.0) * np.log(r)
        out[inside] = np.exp(log_p)
        return out

    return build_grid_density(pdf, dims, resolution)


def gaussian_2d_correlated(rho: float = 0.7, radius: float = 3.0,
                           resolution: int | None = None) -> GridDensity:
    return gaussian_nd(2, rho=rho, radius=radius, resolution=resolution)


def truncated_exponential_1d(rate: float = 2.0, k: int = 2, k0: int = 1,
                             resolution: int | None = None) -> GridDensity:
    """Two-sided exponential (Laplace) truncated via the integer-hypercube helper."""
    if rate <= 0:
        raise ValidationError(f"rate must be positive, got {rate}")

    def pdf(pts: np.ndarray) -> np.ndarray:
        return np.exp(-rate * np.abs(pts[:, 0]))

    return truncate_density(pdf, 1, k, k0, resolution)


#: name -> (builder, parameter names, output dims description) for the CLI
TARGET_FAMILIES = {
    "uniform1d": uniform_1d,
    "bimodal1d": bimodal_1d,
    "step1d": step_1d,
    "gaussian_nd": gaussian_nd,
    "gaussian2d": gaussian_2d_correlated,
    "product_gaussians2d": product_gaussians_2d,
    "dirichlet": dirichlet_projected,
    "laplace1d": truncated_exponential_1d,
}
