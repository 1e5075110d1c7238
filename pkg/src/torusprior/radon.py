"""Parallel-beam Radon transform, FBP baseline, phantoms and noise.

Geometry convention: the line at angle theta and perpendicular offset s is
l(theta, s) = { s n(theta) + t d(theta) } with n = (cos t, sin t),
d = (-sin t, cos t), integrated over the chord of the unit disk
t in [-sqrt(1-s^2), +sqrt(1-s^2)] by Gauss-Legendre quadrature.

Fields live on the torus [0,1)^2; the unit disk is embedded through the
affine map (u, v) in [-1,1]^2  ->  ((u+1)/2, (v+1)/2).  Grid values are
interpolated bilinearly with periodic wrap.  The whole transform is
assembled once as a sparse matrix, so the adjoint (unfiltered
back-projection with matching quadrature weights) is the exact transpose.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse

from .grids import FieldSample, SpatialGrid
from .whitenoise import RngSeed


@dataclass(frozen=True)
class RadonGeometry:
    """Projection angles, detector offsets and quadrature order."""

    angles: tuple
    offsets: tuple
    quad_order: int

    @classmethod
    def make(cls, n_angles: int, max_angle: float, n_detectors: int,
             quad_order: int) -> "RadonGeometry":
        if n_angles < 1 or n_detectors < 1:
            raise ValueError("need at least one angle and one detector")
        angles = tuple(float(k) * max_angle / n_angles for k in range(n_angles))
        offsets = tuple(-1.0 + (j + 0.5) * 2.0 / n_detectors for j in range(n_detectors))
        return cls(angles, offsets, quad_order)

    def __post_init__(self):
        if self.quad_order < 2:
            raise ValueError("quad_order must be >= 2")
        a = np.asarray(self.angles)
        s = np.asarray(self.offsets)
        if a.size and np.any(np.diff(a) <= 0):
            raise ValueError("angles must be strictly increasing")
        if np.any(np.diff(s) <= 0):
            raise ValueError("offsets must be strictly increasing")
        if np.any(np.abs(s) > 1):
            raise ValueError("offsets must lie in [-1, 1]")

    @property
    def shape(self) -> tuple:
        return (len(self.angles), len(self.offsets))

    def metadata(self) -> dict:
        return {"n_angles": len(self.angles), "angles": list(self.angles),
                "offsets": list(self.offsets), "quad_order": self.quad_order}


@dataclass
class Sinogram:
    """Line-integral data, one row per angle, one column per offset."""

    geometry: RadonGeometry
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.geometry.shape:
            raise ValueError("sinogram shape does not match geometry")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sinogram contains non-finite values")


def _bilinear_weights(points_xy: np.ndarray, grid: SpatialGrid):
    """Torus-wrapped bilinear interpolation stencil for arbitrary points.

    Returns (cols, weights) with four grid-node columns per point.
    """
    n = grid.points_per_axis
    t = np.mod(points_xy, 1.0) * n
    i0 = np.floor(t).astype(np.int64)
    frac = t - i0
    i0 = np.mod(i0, n)
    i1 = np.mod(i0 + 1, n)
    fx, fy = frac[:, 0], frac[:, 1]
    cols = np.stack([
        i0[:, 0] * n + i0[:, 1],
        i1[:, 0] * n + i0[:, 1],
        i0[:, 0] * n + i1[:, 1],
        i1[:, 0] * n + i1[:, 1],
    ], axis=1)
    wts = np.stack([
        (1 - fx) * (1 - fy),
        fx * (1 - fy),
        (1 - fx) * fy,
        fx * fy,
    ], axis=1)
    return cols, wts


@lru_cache(maxsize=8)
def radon_matrix(geom: RadonGeometry, grid: SpatialGrid) -> sparse.csr_matrix:
    """Sparse matrix of the discrete Radon transform (rows: angle-major)."""
    if grid.dim != 2:
        raise ValueError("Radon transform needs a 2D grid")
    gx, gw = leggauss(geom.quad_order)
    angles = np.asarray(geom.angles)
    offsets = np.asarray(geom.offsets)
    n_rows = angles.size * offsets.size
    rows_list, cols_list, vals_list = [], [], []
    for ia, th in enumerate(angles):
        nvec = np.array([np.cos(th), np.sin(th)])
        dvec = np.array([-np.sin(th), np.cos(th)])
        half = np.sqrt(np.maximum(0.0, 1.0 - offsets ** 2))
        # physical points on every chord: (n_off, n_quad, 2)
        t = half[:, None] * gx[None, :]
        pts = (offsets[:, None, None] * nvec[None, None, :]
               + t[:, :, None] * dvec[None, None, :])
        uv = pts.reshape(-1, 2)
        xy = (uv + 1.0) / 2.0
        cols, wts = _bilinear_weights(xy, grid)
        qw = (half[:, None] * gw[None, :]).reshape(-1)  # dt = half * gw
        wts = wts * qw[:, None]
        row_ids = np.repeat(ia * offsets.size + np.arange(offsets.size),
                            geom.quad_order)
        rows_list.append(np.repeat(row_ids, 4))
        cols_list.append(cols.ravel())
        vals_list.append(wts.ravel())
    M = sparse.coo_matrix(
        (np.concatenate(vals_list),
         (np.concatenate(rows_list), np.concatenate(cols_list))),
        shape=(n_rows, grid.n_nodes))
    return M.tocsr()


def radon_forward(field: FieldSample, geom: RadonGeometry) -> Sinogram:
    """Gauss-Legendre line integrals over unit-disk chords; linear in the field."""
    M = radon_matrix(geom, field.grid)
    vals = (M @ field.values).reshape(geom.shape)
    return Sinogram(geom, vals)


def radon_adjoint(sino_values: np.ndarray, geom: RadonGeometry,
                  grid: SpatialGrid) -> np.ndarray:
    """Exact transpose of radon_forward (unfiltered back-projection)."""
    M = radon_matrix(geom, grid)
    return M.T @ np.asarray(sino_values, dtype=np.float64).ravel()


def disk_mask(grid: SpatialGrid) -> np.ndarray:
    """Boolean mask of nodes inside the embedded unit disk."""
    coords = grid.node_coords() * 2.0 - 1.0
    return np.sum(coords ** 2, axis=1) <= 1.0


def _ramp_kernel(n: int, ds: float) -> np.ndarray:
    """Spatial samples of the band-limited ramp filter (Ram-Lak)."""
    k = np.arange(-n, n + 1)
    h = np.zeros(k.size)
    h[k == 0] = 1.0 / (4.0 * ds ** 2)
    odd = k % 2 != 0
    h[odd] = -1.0 / (np.pi ** 2 * k[odd].astype(np.float64) ** 2 * ds ** 2)
    return h


def fbp_reconstruct(sino: Sinogram, grid: SpatialGrid) -> FieldSample:
    """Ramp-filtered back-projection baseline (degrades for limited angles).

    The image is zeroed outside the embedded unit disk, where parallel-beam
    data carries no information.
    """
    geom = sino.geometry
    if len(geom.angles) < 2:
        raise ValueError("FBP needs at least two angles")
    offsets = np.asarray(geom.offsets)
    n_s = offsets.size
    ds = offsets[1] - offsets[0] if n_s > 1 else 2.0
    h = _ramp_kernel(n_s, ds)
    filtered = np.empty_like(sino.values)
    start = n_s  # center of the full convolution with the (2 n_s + 1)-tap kernel
    for ia in range(len(geom.angles)):
        filtered[ia] = ds * np.convolve(sino.values[ia], h)[start:start + n_s]
    dtheta = geom.angles[1] - geom.angles[0]
    coords = grid.node_coords() * 2.0 - 1.0
    img = np.zeros(grid.n_nodes)
    for ia, th in enumerate(geom.angles):
        s = coords[:, 0] * np.cos(th) + coords[:, 1] * np.sin(th)
        img += np.interp(s, offsets, filtered[ia], left=0.0, right=0.0)
    img *= dtheta
    img[~disk_mask(grid)] = 0.0
    return FieldSample(grid, img)


@dataclass
class Phantom:
    """Attenuation field built from non-overlapping disk inclusions."""

    grid: SpatialGrid
    values: np.ndarray
    disks: tuple  # ((cx, cy, r), ...) in unit-disk coordinates

    def field(self) -> FieldSample:
        return FieldSample(self.grid, self.values)


def generate_disk_phantom(seed: RngSeed, grid: SpatialGrid,
                          radius_range: tuple = (0.05, 0.2),
                          max_attempts: int = 200) -> Phantom:
    """Greedy rejection sampling of non-overlapping disks inside the unit disk.

    Proposals (center uniform in [-1,1]^2, radius uniform in radius_range)
    are accepted when the disk lies fully inside the unit disk and touches
    no accepted disk.  Deterministic for a fixed seed.
    """
    r_lo, r_hi = radius_range
    if not (0 < r_lo <= r_hi < 0.5):
        raise ValueError("radius range must satisfy 0 < lo <= hi < 0.5")
    rng = seed.generator()
    accepted = []
    for _ in range(max_attempts):
        cx, cy = rng.uniform(-1.0, 1.0, size=2)
        r = rng.uniform(r_lo, r_hi)
        if np.hypot(cx, cy) + r > 1.0:
            continue
        if any(np.hypot(cx - ax, cy - ay) < r + ar for ax, ay, ar in accepted):
            continue
        accepted.append((float(cx), float(cy), float(r)))
    coords = grid.node_coords() * 2.0 - 1.0
    vals = np.zeros(grid.n_nodes)
    for cx, cy, r in accepted:
        inside = (coords[:, 0] - cx) ** 2 + (coords[:, 1] - cy) ** 2 <= r ** 2
        vals[inside] = 1.0
    return Phantom(grid, vals, tuple(accepted))


@dataclass
class NoiseModel:
    """Relative measurement-noise level; sigma derives from the clean data."""

    relative_level: float
    sigma_noise: float = 0.0

    def bind(self, y_clean: np.ndarray) -> "NoiseModel":
        norm = float(np.linalg.norm(y_clean))
        if norm == 0 and self.relative_level > 0:
            raise ValueError("clean data is all zeros; relative noise undefined")
        return NoiseModel(self.relative_level, self.relative_level * norm)


def add_noise(y_clean: np.ndarray, model: NoiseModel, seed: RngSeed):
    """y + sigma z with z iid standard normal; returns (noisy, bound model)."""
    y_clean = np.asarray(y_clean, dtype=np.float64)
    bound = model.bind(y_clean)
    if bound.sigma_noise == 0.0:
        return y_clean.copy(), bound
    z = seed.generator().standard_normal(y_clean.shape)
    return y_clean + bound.sigma_noise * z, bound


def sampling_forward(field: FieldSample, indices) -> np.ndarray:
    """Pointwise observation operator: field values at the listed nodes."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= field.grid.n_nodes):
        raise IndexError("observation index out of range")
    return field.values[idx]
