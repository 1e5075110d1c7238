"""Prior field samplers: 1D parametrix draws, a dense finite-difference
reference solver, and the normalized 2D hierarchical prior.

The hierarchical sampler follows the two-level construction: a smooth
log10 length-scale exponent field Z with unit pointwise variance, then a
field draw through the zeroth-order inverse symbol, scaled per node by the
normalization c(x) with c(x)^2 = sum_eta (10^(a3 + Z(x)) + |eta|^2)^(-2)
so that the marginal variance of the draw is one at every node.

Frequency sums of the form sum_eta g(|eta|^2) w_eta e^(i 2 pi eta.x) are
evaluated through a shell decomposition: frequencies are grouped by
|eta|^2, the per-shell syntheses are computed once with batched FFTs, and
node-dependent radial weights contract against them.  This is exact and
makes forward, normalization and gradient paths share one primitive.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .grids import FieldSample, FrequencyBand, SpatialGrid
from .symbols import SymbolSpec, parametrix_expand
from .transforms import hermitian_row_synthesis, phase_matrix, synthesize_real
from .whitenoise import HermitianLayout, WhiteNoiseSpectrum, layout_for


# ---------------------------------------------------------------------------
# 1D sampler and finite-difference reference


def sample_prior_1d(spec: SymbolSpec, N: int, noise: WhiteNoiseSpectrum,
                    method: str = "auto") -> FieldSample:
    """Draw xi(x_i) = sum_eta q^(N)(x_i, eta) w_eta e^(i 2 pi eta x_i).

    Each node evaluates the interpolant of its own symbol row against the
    shared noise; the map noise -> field is linear for fixed sigma.
    """
    grid = spec.grid
    if noise.band.dim != grid.dim:
        raise ValueError("noise band dimension mismatch")
    par = parametrix_expand(spec, grid, noise.band, N, method=method)
    q = par.partial_sum.values
    vals = hermitian_row_synthesis(q, noise.coeffs, noise.band, grid)
    return FieldSample(grid, vals)


def prior_map_matrix(q_rows: np.ndarray, band: FrequencyBand,
                     grid: SpatialGrid) -> np.ndarray:
    """Dense real matrix of the linear map whitened params -> field values.

    Column conventions follow HermitianLayout: for a canonical pair the two
    columns are sqrt(2) Re(q e) and -sqrt(2) Im(q e); zero and
    self-conjugate modes contribute Re(q e) directly.
    """
    layout = layout_for(band)
    E = phase_matrix(grid, band)
    QE = q_rows * E
    B = np.zeros((grid.n_nodes, layout.n_params))
    if layout.zero >= 0:
        B[:, layout._real_slots[layout.zero]] = QE[:, layout.zero].real
    if layout.selfs.size:
        B[:, layout._real_slots[layout.selfs]] = QE[:, layout.selfs].real
    if layout.pairs_a.size:
        B[:, layout._real_slots[layout.pairs_a]] = np.sqrt(2.0) * QE[:, layout.pairs_a].real
        B[:, layout._imag_slots[layout.pairs_a]] = -np.sqrt(2.0) * QE[:, layout.pairs_a].imag
    return B


def periodic_laplacian_matrix(grid: SpatialGrid) -> np.ndarray:
    """Dense FD matrix of -D^2 (frequency-normalized Laplacian) in 1D.

    Centered second differences scaled by 1/(4 pi^2 dx^2), so the operator's
    eigenvalues approximate |eta|^2, matching the symbol convention.
    """
    if grid.dim != 1:
        raise ValueError("1D only")
    n = grid.points_per_axis
    second = (np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1)
              + np.diag(np.ones(n - 1), -1))
    second[0, -1] = second[-1, 0] = 1.0
    dx = grid.spacing
    return -second / (4.0 * np.pi ** 2 * dx ** 2)


def fd_reference_1d(spec: SymbolSpec, noise_field: FieldSample) -> FieldSample:
    """Reference draw A^(-alpha/2) psi with A = diag(sigma) + FD Laplacian.

    Dense symmetric eigendecomposition; intended for grids up to ~1024.
    """
    grid = spec.grid
    if grid.n_nodes > 1024:
        raise ValueError("dense FD reference limited to 1024 nodes")
    if noise_field.grid != grid:
        raise ValueError("noise field grid mismatch")
    A = np.diag(spec.sigma.values) + periodic_laplacian_matrix(grid)
    lam, V = np.linalg.eigh(A)
    if lam.min() <= 0:
        raise ValueError("FD operator not positive definite")
    sol = V @ (lam ** (-spec.alpha / 2.0) * (V.T @ noise_field.values))
    return FieldSample(grid, sol)


def noise_field(noise: WhiteNoiseSpectrum, grid: SpatialGrid) -> FieldSample:
    """Synthesize a white-noise spectrum as a real field on the grid."""
    return FieldSample(grid, synthesize_real(noise.coeffs, noise.band, grid))


def high_frequency_energy_fraction(f: FieldSample, cutoff: int) -> float:
    """Spectral energy fraction carried by modes with max_k |eta_k| > cutoff."""
    grid = f.grid
    spec = np.fft.fftn(f.as_array()) / grid.n_nodes
    n = grid.points_per_axis
    m = np.arange(n)
    m = np.where(m <= n // 2, m, m - n)
    if grid.dim == 1:
        mask = np.abs(m) > cutoff
    else:
        mask = (np.abs(m)[:, None] > cutoff) | (np.abs(m)[None, :] > cutoff)
    tot = float(np.sum(np.abs(spec) ** 2))
    return float(np.sum(np.abs(spec[mask]) ** 2) / tot)


# ---------------------------------------------------------------------------
# shell decomposition for radial frequency sums


class ShellDecomposition:
    """Frequencies of a band grouped by |eta|^2, with batched FFT synthesis."""

    def __init__(self, band: FrequencyBand, grid: SpatialGrid):
        if band.dim != grid.dim:
            raise ValueError("grid/band dimension mismatch")
        if np.any(band.mirror_index < 0):
            raise ValueError("shell synthesis requires a fully Hermitian-paired band")
        self.band = band
        self.grid = grid
        r2 = band.abs_sq
        self.r_values, self.shell_of = np.unique(r2, return_inverse=True)
        self.r_values = self.r_values.astype(np.float64)
        self.multiplicity = np.bincount(self.shell_of,
                                        minlength=self.r_values.size).astype(np.float64)
        n = grid.points_per_axis
        mi = band.multi_indices
        flat_bins = np.zeros(band.n_freq, dtype=np.int64)
        stride = 1
        for ax in range(grid.dim - 1, -1, -1):
            flat_bins += np.mod(mi[:, ax], n) * stride
            stride *= n
        self.scatter_index = self.shell_of * grid.n_nodes + flat_bins

    @property
    def n_shells(self) -> int:
        return self.r_values.size

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Per-shell syntheses H[k, i] = sum_{|eta|^2 = r_k} w_eta e^(i2pi eta.x_i).

        Hermitian input makes every shell real (shells are closed under
        eta -> -eta on symmetric bands).  Shape (n_shells, n_nodes).
        """
        g = self.grid
        buf = np.zeros(self.n_shells * g.n_nodes, dtype=np.complex128)
        np.add.at(buf, self.scatter_index, coeffs)
        buf = buf.reshape((self.n_shells,) + (g.points_per_axis,) * g.dim)
        axes = tuple(range(1, g.dim + 1))
        out = np.fft.ifftn(buf, axes=axes) * g.n_nodes
        return out.real.reshape(self.n_shells, g.n_nodes)

    def adjoint(self, g_shells: np.ndarray) -> np.ndarray:
        """Adjoint of synthesize as a real-linear map into layout parameters'
        coefficient space: returns the complex accumulator
        G_eta = sum_i g[shell(eta), i] e^(-i 2 pi eta . x_i); feed it to
        HermitianLayout.from_coeffs to obtain the parameter gradient."""
        g = self.grid
        arr = np.asarray(g_shells, dtype=np.float64)
        arr = arr.reshape((self.n_shells,) + (g.points_per_axis,) * g.dim)
        axes = tuple(range(1, g.dim + 1))
        spec = np.fft.fftn(arr, axes=axes).reshape(self.n_shells, g.n_nodes)
        flat = spec.ravel()
        return flat[self.scatter_index]


@lru_cache(maxsize=16)
def shells_for(band: FrequencyBand, grid: SpatialGrid) -> ShellDecomposition:
    return ShellDecomposition(band, grid)


# ---------------------------------------------------------------------------
# 2D hierarchical prior


@dataclass(frozen=True)
class HierarchicalSpec:
    """Hyper-prior constants and discretization of the hierarchical prior.

    a1 is the band sum sum_eta (a2 + |eta|^2)^(-4); dividing the hyper
    symbol by sqrt(a1) gives the exponent field unit pointwise variance.
    """

    a1: float
    a2: float
    a3: float
    band: FrequencyBand
    grid: SpatialGrid

    @classmethod
    def create(cls, band: FrequencyBand, grid: SpatialGrid,
               a2: float = 6.25, a3: float = 2.5) -> "HierarchicalSpec":
        return cls(compute_variance_constant(a2, band), a2, a3, band, grid)

    def __post_init__(self):
        if self.a2 <= 0:
            raise ValueError("a2 must be positive")
        expected = compute_variance_constant(self.a2, self.band)
        if not np.isclose(self.a1, expected, rtol=1e-12, atol=0):
            raise ValueError("a1 does not match the band's variance sum")

    def metadata(self) -> dict:
        return {"a1": self.a1, "a2": self.a2, "a3": self.a3,
                "band": self.band.metadata(),
                "grid": {"dim": self.grid.dim,
                         "points_per_axis": self.grid.points_per_axis}}


def compute_variance_constant(a2: float, band: FrequencyBand) -> float:
    """Lattice sum sum_eta (a2 + |eta|^2)^(-4) over the band."""
    if band.n_freq == 0:
        raise ValueError("empty band")
    return float(np.sum((a2 + band.abs_sq.astype(np.float64)) ** -4))


def hyper_symbol(spec: HierarchicalSpec) -> np.ndarray:
    """Spectral weights (a2 + |eta|^2)^(-2) / sqrt(a1) of the exponent field."""
    g = (spec.a2 + spec.band.abs_sq.astype(np.float64)) ** -2
    return g / np.sqrt(spec.a1)


def sample_hyper_sigma(spec: HierarchicalSpec, noise: WhiteNoiseSpectrum) -> FieldSample:
    """Draw the smooth exponent field Z with Var Z(x) = 1 at every node."""
    if noise.band != spec.band:
        raise ValueError("noise band mismatch")
    coeffs = hyper_symbol(spec) * noise.coeffs
    return FieldSample(spec.grid, synthesize_real(coeffs, spec.band, spec.grid))


@dataclass
class NormalizationField:
    """Positive per-node scaling c(x) restoring unit local variance."""

    grid: SpatialGrid
    c_values: np.ndarray

    def __post_init__(self):
        self.c_values = np.asarray(self.c_values, dtype=np.float64)
        if self.c_values.shape != (self.grid.n_nodes,):
            raise ValueError("normalization length must equal node count")
        if self.c_values.min() <= 0:
            raise ValueError("normalization must be strictly positive")


def compute_normalization(sigma_field: FieldSample, a3: float,
                          band: FrequencyBand) -> NormalizationField:
    """c(x_i)^2 = sum_eta (10^(a3 + sigma(x_i)) + |eta|^2)^(-2), band-truncated."""
    theta = 10.0 ** (a3 + sigma_field.values)
    shells = shells_for(band, sigma_field.grid)
    c_sq = np.sum(shells.multiplicity[None, :]
                  * (theta[:, None] + shells.r_values[None, :]) ** -2, axis=1)
    return NormalizationField(sigma_field.grid, np.sqrt(c_sq))


def hierarchical_xi_given_sigma(spec: HierarchicalSpec, sigma_values: np.ndarray,
                                coeffs: np.ndarray, normalize: bool = True) -> np.ndarray:
    """Field draw for a fixed exponent field:
    xi(x_i) = c(x_i)^(-1) sum_eta (10^(a3+sigma(x_i)) + |eta|^2)^(-1) w_eta e^(i2pi eta.x_i)."""
    shells = shells_for(spec.band, spec.grid)
    theta = 10.0 ** (spec.a3 + np.asarray(sigma_values))
    d1 = (theta[:, None] + shells.r_values[None, :]) ** -1
    H = shells.synthesize(coeffs)
    xi = np.einsum("ik,ki->i", d1, H)
    if normalize:
        c_sq = np.sum(shells.multiplicity[None, :] * d1 * d1, axis=1)
        xi = xi / np.sqrt(c_sq)
    return xi


def sample_hierarchical_2d(spec: HierarchicalSpec, s1: WhiteNoiseSpectrum,
                           s2: WhiteNoiseSpectrum, normalize: bool = True):
    """Draw (sigma, xi) from the hierarchical prior with N = 0 truncation."""
    if s1.seed is not None and s2.seed is not None and s1.seed == s2.seed:
        raise ValueError("s1 and s2 must come from distinct noise streams")
    if s1.band != spec.band or s2.band != spec.band:
        raise ValueError("noise band mismatch")
    sigma = sample_hyper_sigma(spec, s1)
    xi = hierarchical_xi_given_sigma(spec, sigma.values, s2.coeffs, normalize)
    return sigma, FieldSample(spec.grid, xi)


def hierarchical_prior_matrix(spec: HierarchicalSpec,
                              sigma_values: np.ndarray) -> np.ndarray:
    """Dense matrix of params -> xi for a fixed exponent field.

    Used when the hierarchy is pinned (e.g. sampling with sigma fixed at
    its MAP): one matrix-vector product per posterior evaluation.
    """
    layout = layout_for(spec.band)
    theta = 10.0 ** (spec.a3 + np.asarray(sigma_values))
    r2 = spec.band.abs_sq.astype(np.float64)
    weights = 1.0 / (theta[:, None] + r2[None, :])
    c = np.sqrt(np.sum(weights ** 2, axis=1))
    q_rows = (weights / c[:, None]).astype(np.complex128)
    return prior_map_matrix(q_rows, spec.band, spec.grid)


# ---------------------------------------------------------------------------
# level-set transform


@dataclass(frozen=True)
class LevelSetSpec:
    """Sigmoid sharpness for the smooth level-set pushforward."""

    k: float

    def __post_init__(self):
        if not np.isfinite(self.k) or self.k <= 0:
            raise ValueError("sharpness k must be finite and positive")


def level_set_transform(xi: FieldSample, spec: LevelSetSpec) -> FieldSample:
    """Smooth two-level map 1 / (1 + exp(-k xi)); values strictly in (0, 1)."""
    out = expit(spec.k * xi.values)
    tiny = np.nextafter(0.0, 1.0)
    top = np.nextafter(1.0, 0.0)
    return FieldSample(xi.grid, np.clip(out, tiny, top))
