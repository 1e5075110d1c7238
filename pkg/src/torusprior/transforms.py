"""Spectral primitives: truncated Fourier synthesis/analysis and derivatives.

Conventions
-----------
Synthesis is the plain sum  f(x) = sum_eta c(eta) exp(i 2 pi eta . x);
analysis carries the 1/N^d factor, matching continuous Fourier coefficients
for band-limited inputs.

Self-conjugate modes (band members whose mirror -eta is outside the band,
i.e. the 1D edge mode -N) synthesize through the real part of their term,
c * cos(2 pi eta . x).  With this convention a Hermitian coefficient vector
always produces a real field, and when band size equals grid size the rule
reduces to the classical real-FFT Nyquist layout.
"""

from __future__ import annotations

import numpy as np

from .grids import FieldSample, FrequencyBand, SpatialGrid


def evaluate_fourier_series(coeffs: np.ndarray, band: FrequencyBand, x) -> complex | np.ndarray:
    """Evaluate the truncated Fourier series at one or more points.

    Parameters
    ----------
    coeffs : complex array of length band.n_freq, enumeration order.
    band : FrequencyBand the coefficients are indexed by.
    x : point in [0,1)^d, shape (dim,) or (m, dim) (scalars allowed in 1D).

    Returns the complex series value(s); exact for band-limited input.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if coeffs.shape != (band.n_freq,):
        raise ValueError(f"coeffs length {coeffs.shape} != band size {band.n_freq}")
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 0 or pts.shape == (band.dim,)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(1, -1) if pts.shape[0] == band.dim else pts.reshape(-1, 1)
    if pts.shape[1] != band.dim:
        raise ValueError(f"points have dim {pts.shape[1]}, band dim {band.dim}")
    phases = np.exp(2j * np.pi * (pts @ band.multi_indices.T))
    terms = phases * coeffs[None, :]
    selfs = band.hermitian_structure["selfs"]
    out = terms.sum(axis=1)
    if selfs.size:
        out += terms[:, selfs].real.sum(axis=1) - terms[:, selfs].sum(axis=1)
    return complex(out[0]) if single else out


def _fold_bins(coeffs: np.ndarray, band: FrequencyBand, grid: SpatialGrid) -> np.ndarray:
    """Fold band coefficients into the grid's FFT bins (exact at grid nodes).

    eta and eta + N generate identical values on the N-grid, so every
    coefficient accumulates into bin eta mod N; self-conjugate modes split
    half-and-half between the bins of eta and -eta (the cosine convention).
    """
    n = grid.points_per_axis
    shape = (n,) * grid.dim
    buf = np.zeros(shape, dtype=np.complex128)
    mi = band.multi_indices
    selfs = band.hermitian_structure["selfs"]
    w = coeffs.astype(np.complex128).copy()
    bins = tuple(np.mod(mi[:, ax], n) for ax in range(grid.dim))
    if selfs.size:
        w[selfs] *= 0.5
        extra_bins = tuple(np.mod(-mi[selfs, ax], n) for ax in range(grid.dim))
        np.add.at(buf, extra_bins, w[selfs])
    np.add.at(buf, bins, w)
    return buf


def synthesize_at_nodes(coeffs: np.ndarray, band: FrequencyBand, grid: SpatialGrid) -> np.ndarray:
    """Trigonometric interpolant of `coeffs` evaluated at all grid nodes.

    Agrees with evaluate_fourier_series at every node; implemented with an
    aliasing fold plus one inverse FFT.  Returns a complex flat node vector.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if coeffs.shape != (band.n_freq,):
        raise ValueError("coefficient/band size mismatch")
    if band.dim != grid.dim:
        raise ValueError("grid/band dimension mismatch")
    buf = _fold_bins(coeffs, band, grid)
    out = np.fft.ifftn(buf) * grid.n_nodes
    return out.ravel()


def inverse_dft_row(row: np.ndarray, band: FrequencyBand, grid: SpatialGrid) -> np.ndarray:
    """Discrete inverse Fourier transform of one coefficient row onto the grid."""
    return synthesize_at_nodes(row, band, grid)


def synthesize_real(coeffs: np.ndarray, band: FrequencyBand, grid: SpatialGrid,
                    rtol: float = 1e-10) -> np.ndarray:
    """Synthesize a Hermitian coefficient vector and verify the result is real."""
    z = synthesize_at_nodes(coeffs, band, grid)
    scale = np.abs(z.real).max()
    resid = np.abs(z.imag).max()
    if resid > rtol * max(scale, 1e-300):
        raise ValueError(f"imaginary residue {resid:.3e} exceeds {rtol:.1e} relative")
    return z.real.copy()


def analyze_on_grid(values: np.ndarray, grid: SpatialGrid, band: FrequencyBand) -> np.ndarray:
    """Fourier coefficients of grid samples, restricted to the band.

    Requires eta -> eta mod N to be injective over the band (no aliasing
    collisions between distinct band members).  Inverse of
    synthesize_at_nodes for fields band-limited to the band.
    """
    if band.dim != grid.dim:
        raise ValueError("grid/band dimension mismatch")
    n = grid.points_per_axis
    mi = band.multi_indices
    flat_bins = np.zeros(band.n_freq, dtype=np.int64)
    stride = 1
    for ax in range(grid.dim - 1, -1, -1):
        flat_bins += np.mod(mi[:, ax], n) * stride
        stride *= n
    if np.unique(flat_bins).size != band.n_freq:
        raise ValueError("band aliases on this grid; analysis is ambiguous")
    spec = np.fft.fftn(grid.reshape(np.asarray(values))) / grid.n_nodes
    coeffs = spec.ravel()[flat_bins]
    selfs = band.hermitian_structure["selfs"]
    if selfs.size:
        mirror_bins = np.zeros(selfs.size, dtype=np.int64)
        stride = 1
        for ax in range(grid.dim - 1, -1, -1):
            mirror_bins += np.mod(-mi[selfs, ax], n) * stride
            stride *= n
        distinct = mirror_bins != flat_bins[selfs]
        coeffs[selfs[distinct]] += spec.ravel()[mirror_bins[distinct]]
    return coeffs


def _falling_factorial_factors(n: int, gamma: int) -> np.ndarray:
    """Eigenvalues prod_{j<gamma} (m - j) of D^(gamma) on the grid's natural modes."""
    m = np.arange(n)
    m = np.where(m <= n // 2, m, m - n).astype(np.float64)
    fac = np.ones(n)
    for j in range(gamma):
        fac *= m - j
    return fac


def spectral_derivative(values, grid: SpatialGrid, gamma) -> np.ndarray:
    """Apply D_x^(gamma) = prod_j ((1/(i 2 pi)) d/dx - j) per axis, spectrally.

    `values` may be a FieldSample, a flat node vector or a stack of columns
    with leading dimension n_nodes (each column differentiated
    independently).  The mean is removed before transforming when |gamma| >= 1
    (D annihilates constants exactly), which keeps the homogeneous limit
    exact to rounding.  Returns a complex array of the same shape.
    """
    if isinstance(values, FieldSample):
        values = values.values
    v = np.asarray(values, dtype=np.complex128)
    gamma = tuple(np.atleast_1d(np.asarray(gamma, dtype=np.int64)))
    if len(gamma) != grid.dim:
        raise ValueError("gamma length must equal grid dim")
    if any(g < 0 for g in gamma):
        raise ValueError("derivative order components must be non-negative")
    total = int(sum(gamma))
    if total > 8:
        raise ValueError("derivative order too large (|gamma| <= 8)")
    flat_in = v.ndim == 1
    cols = v[:, None] if flat_in else v
    if cols.shape[0] != grid.n_nodes:
        raise ValueError("leading dimension must be n_nodes")
    if total == 0:
        return v.copy()
    n = grid.points_per_axis
    work = cols - cols.mean(axis=0, keepdims=True)
    extra = cols.shape[1:]
    work = work.reshape((n,) * grid.dim + extra)
    spatial_axes = tuple(range(grid.dim))
    spec = np.fft.fftn(work, axes=spatial_axes)
    for ax, g in enumerate(gamma):
        if g == 0:
            continue
        fac = _falling_factorial_factors(n, int(g))
        shape = [1] * work.ndim
        shape[ax] = n
        spec *= fac.reshape(shape)
    out = np.fft.ifftn(spec, axes=spatial_axes)
    out = out.reshape((grid.n_nodes,) + extra)
    return out[:, 0] if flat_in else out


def phase_matrix(grid: SpatialGrid, band: FrequencyBand) -> np.ndarray:
    """exp(i 2 pi x_i . eta_j), shape (n_nodes, n_freq); intended for small problems."""
    coords = grid.node_coords()
    return np.exp(2j * np.pi * (coords @ band.multi_indices.T))


def hermitian_row_synthesis(rows: np.ndarray, coeffs: np.ndarray, band: FrequencyBand,
                            grid: SpatialGrid, rtol: float = 1e-10) -> np.ndarray:
    """Per-node synthesis xi(x_i) = sum_eta rows[i, eta] coeffs[eta] e^{i2pi eta.x_i}.

    Each spatial row carries its own symbol values (rows Hermitian in eta),
    `coeffs` is a Hermitian noise vector; self-conjugate modes contribute
    their real part.  Returns the real field values after checking the
    imaginary residue.
    """
    E = phase_matrix(grid, band)
    terms = rows * coeffs[None, :] * E
    out = terms.sum(axis=1)
    selfs = band.hermitian_structure["selfs"]
    if selfs.size:
        out += terms[:, selfs].real.sum(axis=1) - terms[:, selfs].sum(axis=1)
    scale = max(np.abs(out.real).max(), 1e-300)
    if np.abs(out.imag).max() > rtol * scale:
        raise ValueError(
            f"imaginary residue {np.abs(out.imag).max() / scale:.3e} exceeds {rtol:.1e}")
    return out.real.copy()
