"""Spectral core: series evaluation, DFT rows, derivatives, round trips."""

import numpy as np
import pytest

from torusprior import (FieldSample, FrequencyBand, RngSeed, SpatialGrid,
                        analyze_on_grid, evaluate_fourier_series,
                        inverse_dft_row, sample_white_noise,
                        spectral_derivative, synthesize_at_nodes)
from torusprior.symbols import paper_bump_sigma


def direct_sum(coeffs, band, x):
    """Independent direct-summation oracle (plain loop, same self-mode rule)."""
    x = np.atleast_1d(x)
    total = 0.0 + 0.0j
    mirror = band.mirror_index
    for j, eta in enumerate(band.multi_indices):
        term = coeffs[j] * np.exp(2j * np.pi * float(eta @ x))
        total += term.real if mirror[j] < 0 else term
    return total


class TestEvaluateFourierSeries:
    def test_constant_mode(self):
        band = FrequencyBand.dim1(4)
        coeffs = np.zeros(band.n_freq, complex)
        coeffs[band.index_of(0)] = 1.0
        for x in (0.0, 0.3, 0.9):
            assert evaluate_fourier_series(coeffs, band, x) == pytest.approx(1.0)

    def test_two_cosine_modes_at_zero(self):
        band = FrequencyBand.dim1(4)
        coeffs = np.zeros(band.n_freq, complex)
        coeffs[band.index_of(1)] = 1.0
        coeffs[band.index_of(-1)] = 1.0
        assert evaluate_fourier_series(coeffs, band, 0.0) == pytest.approx(2.0)

    def test_matches_direct_summation_oracle(self):
        band = FrequencyBand.dim1(16)
        noise = sample_white_noise(band, RngSeed(11))
        got = evaluate_fourier_series(noise.coeffs, band, 0.37)
        want = direct_sum(noise.coeffs, band, 0.37)
        assert abs(got - want) < 1e-12

    def test_dimension_mismatch(self):
        band = FrequencyBand.dim1(4)
        with pytest.raises(ValueError):
            evaluate_fourier_series(np.zeros(3, complex), band, 0.0)


class TestInverseDftRow:
    def test_delta_at_zero_gives_ones(self):
        band = FrequencyBand.dim1(8)
        grid = SpatialGrid(1, 17)
        row = np.zeros(band.n_freq, complex)
        row[band.index_of(0)] = 1.0
        out = inverse_dft_row(row, band, grid)
        assert np.allclose(out, 1.0, atol=1e-13)

    def test_known_cosine(self):
        band = FrequencyBand.dim1(8)
        grid = SpatialGrid(1, 21)
        row = np.zeros(band.n_freq, complex)
        row[band.index_of(3)] = 0.5
        row[band.index_of(-3)] = 0.5
        out = inverse_dft_row(row, band, grid)
        x = grid.axis_nodes
        assert np.allclose(out.real, np.cos(2 * np.pi * 3 * x), atol=1e-12)
        assert np.abs(out.imag).max() < 1e-12

    def test_random_hermitian_row_is_real(self):
        band = FrequencyBand.dim1(32)
        grid = SpatialGrid(1, 65)
        noise = sample_white_noise(band, RngSeed(5))
        out = inverse_dft_row(noise.coeffs, band, grid)
        assert np.abs(out.imag).max() < 1e-10 * np.abs(out.real).max()

    def test_agrees_with_series_at_every_node(self):
        band = FrequencyBand.dim1(12)
        grid = SpatialGrid(1, 31)
        noise = sample_white_noise(band, RngSeed(6))
        fast = inverse_dft_row(noise.coeffs, band, grid)
        for i in [0, 7, 19, 30]:
            ref = evaluate_fourier_series(noise.coeffs, band, grid.axis_nodes[i])
            assert abs(fast[i] - ref) <= 1e-12 * max(1.0, abs(ref))

    def test_grid_band_dimension_mismatch(self):
        with pytest.raises(ValueError):
            inverse_dft_row(np.zeros(FrequencyBand.dim2(2).n_freq, complex),
                            FrequencyBand.dim2(2), SpatialGrid(1, 9))

    def test_2d_agrees_with_series(self):
        band = FrequencyBand.dim2(3)
        grid = SpatialGrid(2, 8)
        noise = sample_white_noise(band, RngSeed(8))
        fast = inverse_dft_row(noise.coeffs, band, grid)
        coords = grid.node_coords()
        for i in [0, 13, 37, 63]:
            ref = evaluate_fourier_series(noise.coeffs, band, coords[i])
            assert abs(fast[i] - ref) <= 1e-12 * max(1.0, abs(ref))


class TestRoundTrip:
    def test_analyze_inverts_synthesize(self):
        band = FrequencyBand.dim1(10)
        grid = SpatialGrid(1, 33)
        noise = sample_white_noise(band, RngSeed(3))
        vals = synthesize_at_nodes(noise.coeffs, band, grid)
        back = analyze_on_grid(vals, grid, band)
        assert np.abs(back - noise.coeffs).max() < 1e-12

    def test_analyze_inverts_synthesize_2d(self):
        band = FrequencyBand.dim2(4)
        grid = SpatialGrid(2, 12)
        noise = sample_white_noise(band, RngSeed(4))
        vals = synthesize_at_nodes(noise.coeffs, band, grid)
        back = analyze_on_grid(vals, grid, band)
        assert np.abs(back - noise.coeffs).max() < 1e-12

    def test_aliasing_rejected(self):
        band = FrequencyBand.dim1(10)   # [-10, 9] needs >= 20 grid points
        grid = SpatialGrid(1, 16)
        with pytest.raises(ValueError, match="alias"):
            analyze_on_grid(np.zeros(grid.n_nodes), grid, band)


class TestSpectralDerivative:
    def test_constant_field_derivative_is_exactly_zero(self):
        grid = SpatialGrid(1, 65)
        f = np.full(grid.n_nodes, 3.7, dtype=complex)
        out = spectral_derivative(f, grid, (1,))
        assert np.abs(out).max() == 0.0

    def test_first_mode_eigenvalue(self):
        grid = SpatialGrid(1, 32)
        x = grid.axis_nodes
        f = np.exp(2j * np.pi * x)
        out = spectral_derivative(f, grid, (1,))
        assert np.abs(out - f).max() < 1e-12

    def test_against_dense_dft_matrix_oracle(self):
        # order-2 derivative of the reference bump profile on 65 nodes
        grid = SpatialGrid(1, 65)
        sigma = paper_bump_sigma(grid).values.astype(complex)
        n = grid.points_per_axis
        x = grid.axis_nodes
        m = np.where(np.arange(n) <= n // 2, np.arange(n), np.arange(n) - n)
        F = np.exp(-2j * np.pi * np.outer(m, x)) / n          # analysis matrix
        S = np.exp(2j * np.pi * np.outer(x, m))               # synthesis matrix
        fac = (m - 0.0) * (m - 1.0)
        oracle = S @ (fac * (F @ (sigma - sigma.mean())))
        got = spectral_derivative(sigma, grid, (2,))
        assert np.abs(got - oracle).max() < 1e-9

    def test_linearity(self):
        grid = SpatialGrid(1, 40)
        rng = np.random.default_rng(0)
        f = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        g = rng.standard_normal(40)
        a, b = 1.3, -0.7
        lhs = spectral_derivative(a * f + b * g, grid, (3,))
        rhs = a * spectral_derivative(f, grid, (3,)) \
            + b * spectral_derivative(g, grid, (3,))
        assert np.abs(lhs - rhs).max() < 1e-12 * max(1, np.abs(lhs).max())

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            spectral_derivative(np.zeros(8), SpatialGrid(1, 8), (-1,))

    def test_2d_mixed_derivative(self):
        grid = SpatialGrid(2, 16)
        coords = grid.node_coords()
        f = np.exp(2j * np.pi * (2 * coords[:, 0] + coords[:, 1]))
        out = spectral_derivative(f, grid, (1, 1))
        # eigenvalue eta_x * eta_y = 2 * 1
        assert np.abs(out - 2.0 * f).max() < 1e-11


class TestFrequencyBand:
    def test_1d_convention(self):
        band = FrequencyBand.dim1(32)
        assert band.multi_indices[0, 0] == -32
        assert band.multi_indices[-1, 0] == 31
        assert band.n_freq == 64

    def test_2d_convention(self):
        band = FrequencyBand.dim2(3)
        assert band.n_freq == 49
        assert tuple(band.multi_indices[0]) == (-3, -3)
        assert tuple(band.multi_indices[-1]) == (3, 3)

    def test_hermitian_structure_1d_edge_mode(self):
        band = FrequencyBand.dim1(4)
        hs = band.hermitian_structure
        assert hs["selfs"].tolist() == [band.index_of(-4)]
        assert hs["zero"] == band.index_of(0)

    def test_enumeration_bijection(self):
        band = FrequencyBand.dim2(2)
        for j, eta in enumerate(band.multi_indices):
            assert band.index_of(eta) == j
