"""Grid densities on the cube [-1,1]^M and triangular transport maps.

A target distribution is discretized as cell masses on a regular grid.  The
triangular (coordinate-by-coordinate conditional inverse-CDF) map pushes the
uniform distribution on [0,1]^M forward to the grid law: coordinate k is drawn
from its conditional CDF given the cells hit by coordinates < k, with
coordinates > k marginalized out.  Within a cell the CDF is interpolated
linearly, so the pushforward reproduces the grid density exactly (uniform
within cells).

Conventions for the inverse CDF: flat stretches (zero-mass cells) resolve to
the left edge of the gap, x=0 maps to the left edge of the first cell with
positive conditional mass, and a conditioning slice with zero total mass falls
back to the unconditional marginal of that coordinate.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .rng import keyed_generator
from .samplers import SampleSet, _atomic_write

_NORM_ATOL = 1e-9
_CHUNK = 8192

#: default grid resolution per dimension count
_DEFAULT_RESOLUTION = {1: 256, 2: 256, 3: 64}


def default_resolution(dims: int) -> int:
    return _DEFAULT_RESOLUTION.get(dims, 32)


@dataclass(frozen=True)
class GridDensity:
    """Probability density discretized on a regular grid over [-1,1]^dims.

    `values` holds nonnegative densities at cell midpoints, normalized so that
    values.sum() * cell_volume == 1.  If the density was produced by rescaling
    a box [shift - scale, shift + scale]^dims to the unit cube, that affine map
    is recorded in `affine_shift` / `affine_scale` (identity by default):
    original coordinates = shift + scale * unit coordinates.
    """

    dims: int
    resolution: int
    values: np.ndarray
    affine_shift: np.ndarray = None
    affine_scale: np.ndarray = None

    def __post_init__(self):
        if self.dims < 1:
            raise ValidationError(f"dims must be >= 1, got {self.dims}")
        if self.resolution < 2:
            raise ValidationError(f"resolution must be >= 2, got {self.resolution}")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.resolution,) * self.dims:
            raise ValidationError(
                f"values shape {vals.shape} does not match "
                f"({self.resolution},)*{self.dims}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValidationError("density values must be finite")
        if np.any(vals < 0):
            raise ValidationError("density values must be nonnegative")
        total = vals.sum() * self.cell_volume
        if abs(total - 1.0) > _NORM_ATOL:
            raise ValidationError(f"density integrates to {total!r}, expected 1")
        object.__setattr__(self, "values", vals)
        shift = self.affine_shift
        scale = self.affine_scale
        shift = np.zeros(self.dims) if shift is None else np.asarray(shift, dtype=float)
        scale = np.ones(self.dims) if scale is None else np.asarray(scale, dtype=float)
        if shift.shape != (self.dims,) or scale.shape != (self.dims,):
            raise ValidationError("affine_shift/affine_scale must have shape (dims,)")
        object.__setattr__(self, "affine_shift", shift)
        object.__setattr__(self, "affine_scale", scale)

    @property
    def cell_width(self) -> float:
        return 2.0 / self.resolution

    @property
    def cell_volume(self) -> float:
        return self.cell_width**self.dims

    def edges(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.resolution + 1)

    def midpoints(self) -> np.ndarray:
        e = self.edges()
        return 0.5 * (e[:-1] + e[1:])

    def cell_masses(self) -> np.ndarray:
        return self.values * self.cell_volume

    def marginal_pmf(self, coord: int) -> np.ndarray:
        axes = tuple(i for i in range(self.dims) if i != coord)
        pmf = self.cell_masses().sum(axis=axes) if axes else self.cell_masses()
        return pmf / pmf.sum()

    def marginal_cdf_at(self, coord: int, y: np.ndarray) -> np.ndarray:
        """Piecewise-linear marginal CDF of `coord` evaluated at unit-cube points."""
        pmf = self.marginal_pmf(coord)
        cum = np.concatenate([[0.0], np.cumsum(pmf)])
        cum /= cum[-1]
        y = np.asarray(y, dtype=float)
        j = np.clip(((y + 1.0) / self.cell_width).astype(int), 0, self.resolution - 1)
        frac = (y - (-1.0 + j * self.cell_width)) / self.cell_width
        return np.clip(cum[j] + np.clip(frac, 0.0, 1.0) * pmf[j], 0.0, 1.0)

    def mean(self) -> np.ndarray:
        """Mean in unit-cube coordinates."""
        mids = self.midpoints()
        mass = self.cell_masses()
        out = np.empty(self.dims)
        for k in range(self.dims):
            axes = tuple(i for i in range(self.dims) if i != k)
            out[k] = (mass.sum(axis=axes) * mids).sum() if axes else (mass * mids).sum()
        return out

    def covariance(self) -> np.ndarray:
        """Covariance in unit-cube coordinates (cell-midpoint approximation)."""
        mids = self.midpoints()
        mass = self.cell_masses()
        mu = self.mean()
        cov = np.empty((self.dims, self.dims))
        for a in range(self.dims):
            for b in range(a, self.dims):
                axes = tuple(i for i in range(self.dims) if i not in (a, b))
                joint = mass.sum(axis=axes) if axes else mass
                if a == b:
                    cov[a, a] = (joint * (mids - mu[a]) ** 2).sum()
                else:
                    cov[a, b] = cov[b, a] = (
                        joint * np.outer(mids - mu[a], mids - mu[b])
                    ).sum()
        return cov


def _midpoint_grid(dims: int, resolution: int) -> np.ndarray:
    """All cell midpoints of [-1,1]^dims as an (R**dims, dims) array, row-major."""
    e = np.linspace(-1.0, 1.0, resolution + 1)
    mids = 0.5 * (e[:-1] + e[1:])
    grids = np.meshgrid(*([mids] * dims), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def build_grid_density(pdf, dims: int, resolution: int | None = None,
                       affine_shift=None, affine_scale=None) -> GridDensity:
    """Discretize a pdf by midpoint evaluation and renormalization.

    `pdf` must accept an (N, dims) array of unit-cube points and return (N,)
    nonnegative values.
    """
    resolution = default_resolution(dims) if resolution is None else int(resolution)
    pts = _midpoint_grid(dims, resolution)
    raw = np.asarray(pdf(pts), dtype=float).reshape((resolution,) * dims)
    if not np.all(np.isfinite(raw)):
        raise ValidationError("pdf returned non-finite values on the grid")
    if np.any(raw < 0):
        raise ValidationError("pdf returned negative values on the grid")
    total = raw.sum() * (2.0 / resolution) ** dims
    if total <= 0:
        raise ValidationError("pdf has zero mass on the grid")
    return GridDensity(dims, resolution, raw / total,
                       affine_shift=affine_shift, affine_scale=affine_scale)


def truncate_density(pdf, dims: int, k: int, k0: int,
                     resolution: int | None = None) -> GridDensity:
    """Restrict a pdf on R^dims to the hypercube [-(k+k0), k+k0]^dims and rescale.

    The restricted density is renormalized and mapped affinely onto the unit
    cube; the affine map (shift 0, scale k+k0) is recorded on the result so the
    original coordinates remain recoverable.  `pdf` takes (N, dims) points in
    original coordinates.
    """
    half_width = int(k) + int(k0)
    if half_width < 1:
        raise ValidationError(f"hypercube half-width k + k0 must be >= 1, got {half_width}")
    scale = float(half_width)

    def unit_pdf(pts: np.ndarray) -> np.ndarray:
        return np.asarray(pdf(pts * scale), dtype=float)

    return build_grid_density(
        unit_pdf, dims, resolution,
        affine_shift=np.zeros(dims), affine_scale=np.full(dims, scale),
    )


# ---------------------------------------------------------------------------
# serialization: header JSON + row-major CSV payload


def save_grid_density(density: GridDensity, basepath: str,
                      extra_meta: dict | None = None) -> None:
    header = {
        "format_version": 1,
        "dims": density.dims,
        "resolution": density.resolution,
        "affine_shift": density.affine_shift.tolist(),
        "affine_scale": density.affine_scale.tolist(),
    }
    if extra_meta:
        header.update(extra_meta)
    _atomic_write(basepath + ".json", json.dumps(header, indent=2, sort_keys=True) + "\n")
    flat = density.values.ravel()
    _atomic_write(basepath + ".csv", "\n".join("%.17g" % v for v in flat) + "\n")


def load_grid_density(basepath: str) -> GridDensity:
    with open(basepath + ".json", "r", encoding="utf-8") as fh:
        header = json.load(fh)
    if header.get("format_version") != 1:
        raise ValidationError(f"unsupported density format {header.get('format_version')!r}")
    dims, resolution = int(header["dims"]), int(header["resolution"])
    values = np.loadtxt(basepath + ".csv").reshape((resolution,) * dims)
    return GridDensity(
        dims, resolution, values,
        affine_shift=np.asarray(header["affine_shift"], dtype=float),
        affine_scale=np.asarray(header["affine_scale"], dtype=float),
    )


# ---------------------------------------------------------------------------
# triangular transport


@dataclass(frozen=True)
class TriangularMap:
    """Conditional-CDF tables implementing a triangular pushforward of U[0,1]^dims.

    tables[k] has shape (R,)*k + (R+1,): the conditional CDF (at cell edges) of
    coordinate k given the cell indices of coordinates 0..k-1.
    """

    dims: int
    resolution: int
    tables: tuple[np.ndarray, ...]

    def edges(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.resolution + 1)


def build_triangular_map(density: GridDensity) -> TriangularMap:
    mass = density.cell_masses()
    r = density.resolution
    tables = []
    for k in range(density.dims):
        tail_axes = tuple(range(k + 1, density.dims))
        joint = mass.sum(axis=tail_axes) if tail_axes else mass  # (R,)*k + (R,)
        flat = joint.reshape(-1, r)
        row_mass = flat.sum(axis=1)
        lead_axes = tuple(range(k))
        marginal = joint.sum(axis=lead_axes) if lead_axes else joint
        marginal = marginal / marginal.sum()
        safe = np.where(row_mass > 0, row_mass, 1.0)[:, None]
        pmf = np.where(row_mass[:, None] > 0, flat / safe, marginal[None, :])
        cdf = np.concatenate([np.zeros((pmf.shape[0], 1)), np.cumsum(pmf, axis=1)], axis=1)
        cdf /= cdf[:, -1:]
        tables.append(cdf.reshape(joint.shape[:-1] + (r + 1,)))
    return TriangularMap(density.dims, r, tuple(tables))


def _invert_rows(cdf_rows: np.ndarray, u: np.ndarray, edges: np.ndarray,
                 cell_width: float) -> tuple[np.ndarray, np.ndarray]:
    """Generalized-inverse CDF per row with lower tie-breaks; returns (y, cell)."""
    r = cdf_rows.shape[1] - 1
    j = np.sum(cdf_rows < u[:, None], axis=1)
    first_pos = np.sum(cdf_rows <= 0.0, axis=1)
    j = np.clip(np.maximum(j, first_pos), 1, r)
    c_hi = np.take_along_axis(cdf_rows, j[:, None], axis=1)[:, 0]
    c_lo = np.take_along_axis(cdf_rows, (j - 1)[:, None], axis=1)[:, 0]
    span = c_hi - c_lo
    frac = np.where(span > 0, (u - c_lo) / np.where(span > 0, span, 1.0), 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    y = edges[j - 1] + frac * cell_width
    return y, j - 1


def map_forward(tri_map: TriangularMap, x: np.ndarray) -> np.ndarray:
    """Apply the triangular map to points of [0,1]^dims; (dims,) or (N, dims)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.ndim != 2 or pts.shape[1] != tri_map.dims:
        raise ValidationError(f"expected points of dim {tri_map.dims}, got shape {x.shape}")
    if np.any(pts < 0.0) or np.any(pts > 1.0):
        raise ValidationError("map inputs must lie in the unit cube [0,1]^dims")
    edges = tri_map.edges()
    width = 2.0 / tri_map.resolution
    out = np.empty_like(pts)
    for start in range(0, pts.shape[0], _CHUNK):
        chunk = pts[start:start + _CHUNK]
        n = chunk.shape[0]
        cells = np.empty((n, tri_map.dims), dtype=np.intp)
        for k in range(tri_map.dims):
            table = tri_map.tables[k]
            if k == 0:
                rows = np.broadcast_to(table, (n, tri_map.resolution + 1))
            else:
                rows = table[tuple(cells[:, j] for j in range(k))]
            y, cell = _invert_rows(rows, chunk[:, k], edges, width)
            out[start:start + n, k] = y
            cells[:, k] = cell
    return out[0] if single else out


def sample_via_map(tri_map: TriangularMap, n_samples: int, seed: int) -> SampleSet:
    """Push chunks of keyed uniform draws through the map (chunk c uses seed child c)."""
    if n_samples < 1:
        raise ValidationError(f"n_samples must be >= 1, got {n_samples}")
    parts = []
    for chunk_index, start in enumerate(range(0, n_samples, _CHUNK)):
        count = min(_CHUNK, n_samples - start)
        u = keyed_generator(seed, chunk_index).random((count, tri_map.dims))
        parts.append(map_forward(tri_map, u))
    values = np.concatenate(parts, axis=0)
    return SampleSet(values, seed=seed, mode="map",
                     source=f"triangular[dims={tri_map.dims},r={tri_map.resolution}]")
