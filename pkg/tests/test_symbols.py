"""Symbol calculus: evaluation, derivative tensors, the expansion recursion."""

import math

import numpy as np
import pytest
import sympy as sp

from torusprior import (FrequencyBand, LengthScaleField, SpatialGrid,
                        SpectralTensor, SymbolSpec, build_derivative_tensors,
                        eval_symbol, finite_difference, paper_bump_sigma,
                        parametrix_expand, term_norms, truncation_error_bound)
from torusprior.symbols import (ParametrixInstabilityError, X_SYMBOL,
                                truncation_bound_parts)

GRID65 = SpatialGrid(1, 65)
BAND64 = FrequencyBand.dim1(32)


def smooth_periodic_sigma(grid):
    """exp(cos)-type profile, analytic and genuinely periodic on the torus."""
    expr = sp.Rational(3, 2) + sp.exp(sp.cos(2 * sp.pi * X_SYMBOL)) / 2
    return LengthScaleField.from_expression(expr, grid)


class TestEvalSymbol:
    def test_reference_bump_at_center(self):
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        assert eval_symbol(spec, 0.5, 0) == pytest.approx(2.05, abs=1e-12)

    def test_growth_exponent(self):
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        etas = np.array([64, 128, 256, 512])
        vals = [eval_symbol(spec, 0.3, e) for e in etas]
        slope = np.polyfit(np.log(etas), np.log(vals), 1)[0]
        assert abs(slope - 2.0) < 0.05

    def test_constant_sigma_2d(self):
        grid = SpatialGrid(2, 8)
        spec = SymbolSpec(2.0, LengthScaleField.constant(1.0, grid))
        assert eval_symbol(spec, (0.25, 0.5), (1, 1)) == pytest.approx(3.0)


class TestDerivativeTensors:
    def test_constant_sigma_first_derivative_vanishes(self):
        spec = SymbolSpec(2.0, LengthScaleField.constant(1.0, GRID65))
        tensors = build_derivative_tensors(spec, GRID65, BAND64, 1,
                                           method="spectral")
        assert np.abs(tensors[1].tensor.values).max() < 1e-12

    def test_order_zero_equals_symbol(self):
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        tensors = build_derivative_tensors(spec, GRID65, BAND64, 0)
        x = GRID65.axis_nodes
        for j in [0, 17, 63]:
            eta = BAND64.multi_indices[j, 0]
            col = tensors[0].tensor.values[:, j]
            ref = [eval_symbol(spec, xi, eta) for xi in x]
            assert np.abs(col - np.array(ref)).max() < 1e-12

    def test_analytic_path_against_richardson_oracle(self):
        # first derivative tensor vs high-order numerical differentiation
        # of the raw symbol formula (independent of the symbolic machinery)
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        tensors = build_derivative_tensors(spec, GRID65, BAND64, 1,
                                           method="analytic")
        got = tensors[1].tensor.values

        def p(x, eta):
            s = 0.05 + 2 * np.exp(-((x - 0.5) ** 2) / 0.5)
            return (s + eta ** 2) ** 1.0

        x = GRID65.axis_nodes[:, None]
        eta = BAND64.multi_indices[None, :, 0].astype(float)

        def cdiff(h):
            return (p(x + h, eta) - p(x - h, eta)) / (2 * h)

        h = 0.02
        r1 = (4 * cdiff(h / 2) - cdiff(h)) / 3
        r1b = (4 * cdiff(h / 4) - cdiff(h / 2)) / 3
        dx_p = (16 * r1b - r1) / 15
        oracle = dx_p / (2j * np.pi)
        assert np.abs(got - oracle).max() < 1e-8

    def test_spectral_matches_closed_form_on_periodic_sigma(self):
        grid = SpatialGrid(1, 65)
        band = FrequencyBand.dim1(16)
        spec = SymbolSpec(2.0, smooth_periodic_sigma(grid))
        spectral = build_derivative_tensors(spec, grid, band, 2,
                                            method="spectral")
        analytic = build_derivative_tensors(spec, grid, band, 2,
                                            method="analytic")
        for g in (1, 2):
            diff = np.abs(spectral[g].tensor.values
                          - analytic[g].tensor.values).max()
            assert diff < 1e-8


class TestFiniteDifference:
    def test_quadratic_forward_difference(self):
        grid = SpatialGrid(1, 5)
        band = FrequencyBand.dim1(4)       # [-4, 3]
        eta = band.multi_indices[:, 0].astype(float)
        vals = np.tile(eta ** 2, (grid.n_nodes, 1)).astype(complex)
        t = SpectralTensor(grid, band, vals)
        d = finite_difference(t, (1,))
        eta_out = d.band.multi_indices[:, 0].astype(float)
        assert np.allclose(d.values[0].real, 2 * eta_out + 1)
        assert d.band.his == (2,)

    def test_constant_difference_zero(self):
        grid = SpatialGrid(1, 3)
        band = FrequencyBand.dim1(3)
        t = SpectralTensor(grid, band, np.ones((3, band.n_freq), complex))
        assert np.abs(finite_difference(t, (1,)).values).max() == 0.0

    def test_second_difference_of_quadratic_is_two(self):
        grid = SpatialGrid(1, 3)
        band = FrequencyBand.dim1(5)
        eta = band.multi_indices[:, 0].astype(float)
        t = SpectralTensor(grid, band,
                           np.tile(eta ** 2, (3, 1)).astype(complex))
        d = finite_difference(t, (2,))
        assert np.allclose(d.values.real, 2.0)

    def test_insufficient_overhead_rejected(self):
        grid = SpatialGrid(1, 3)
        band = FrequencyBand(1, (0,), (1,), 1)
        t = SpectralTensor(grid, band, np.ones((3, 2), complex))
        with pytest.raises(ValueError, match="overhead"):
            finite_difference(t, (2,))


def brute_force_parametrix(sigma_expr, alpha, nx, half, N):
    """Independent scalar-loop implementation of the documented recursion."""
    x_nodes = [i / nx for i in range(nx)]
    L = half + N
    p_sym = (sigma_expr + sp.Symbol("eta") ** 2) ** (sp.nsimplify(alpha) / 2)
    eta_s = sp.Symbol("eta")
    derivs = {}
    for g in range(N + 1):
        gg = p_sym
        for j in range(g):
            gg = sp.diff(gg, X_SYMBOL) / (2 * sp.pi * sp.I) - j * gg
        derivs[g] = sp.lambdify((X_SYMBOL, eta_s), gg, "numpy")

    def P(g, i, e):
        return complex(derivs[g](x_nodes[i], e))

    Q = {}
    for i in range(nx):
        Q[(0, i)] = {e: 1.0 / P(0, i, e) for e in range(-L, L + 1)}
    valid = {0: L}
    for k in range(1, N + 1):
        mk = min(valid[j] - (k - j) for j in range(k))
        for i in range(nx):
            raw = {}
            for e in range(-mk, mk + 1):
                acc = 0.0
                for j in range(k):
                    g = k - j
                    # forward difference of order g at e
                    d = sum((-1) ** (g - m) * math.comb(g, m) * Q[(j, i)][e + m]
                            for m in range(g + 1))
                    acc += d / math.factorial(g) * P(g, i, e)
                raw[e] = -Q[(0, i)][e] * acc
            Q[(k, i)] = {e: 0.5 * (raw[e] + np.conj(raw[-e]))
                         for e in range(-mk, mk + 1)}
        valid[k] = mk
    out = []
    for k in range(N + 1):
        arr = np.array([[Q[(k, i)][e] for e in range(-half, half)]
                        for i in range(nx)])
        out.append(arr)
    return out


class TestParametrix:
    def test_homogeneous_limit_exact(self):
        spec = SymbolSpec(2.0, LengthScaleField.constant(1.0, GRID65))
        ref = 1.0 / (1.0 + BAND64.abs_sq.astype(float))
        for N in range(6):
            par = parametrix_expand(spec, GRID65, BAND64, N)
            q = par.partial_sum.values
            dev = np.abs((q - ref[None, :]) / ref[None, :]).max()
            assert dev < 1e-12

    def test_base_term_is_reciprocal(self):
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        par = parametrix_expand(spec, GRID65, BAND64, 2)
        p0 = (spec.sigma.values[:, None] + BAND64.abs_sq[None, :]) ** 1.0
        prod = par.summands[0].values * p0
        assert np.abs(prod - 1.0).max() < 1e-14

    def test_reality_condition_exact(self):
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        par = parametrix_expand(spec, GRID65, BAND64, 3)
        q = par.partial_sum.values
        mirror = BAND64.mirror_index
        ok = mirror >= 0
        assert np.array_equal(q[:, ok], np.conj(q[:, mirror[ok]]))

    def test_norm_decay_on_reference_configuration(self):
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        par = parametrix_expand(spec, GRID65, BAND64, 3)
        norms = term_norms(par)
        assert all(norms[k + 1] < norms[k] for k in range(3))
        assert norms[1] / norms[0] < 0.2

    def test_brute_force_small_instance(self):
        nx, half, N = 9, 4, 2
        expr = sp.Rational(3, 2) + sp.sin(2 * sp.pi * X_SYMBOL) / 2
        grid = SpatialGrid(1, nx)
        band = FrequencyBand.dim1(half)
        sigma = LengthScaleField.from_expression(expr, grid)
        par = parametrix_expand(SymbolSpec(2.0, sigma), grid, band, N,
                                method="analytic")
        oracle = brute_force_parametrix(expr, 2.0, nx, half, N)
        for k in range(N + 1):
            assert np.abs(par.summands[k].values - oracle[k]).max() < 1e-12

    def test_2d_order_zero(self):
        grid = SpatialGrid(2, 8)
        band = FrequencyBand.dim2(3)
        spec = SymbolSpec(2.0, LengthScaleField.constant(2.0, grid))
        par = parametrix_expand(spec, grid, band, 0)
        ref = 1.0 / (2.0 + band.abs_sq.astype(float))
        assert np.abs(par.partial_sum.values - ref[None, :]).max() < 1e-14

    def test_2d_higher_order_rejected(self):
        grid = SpatialGrid(2, 8)
        band = FrequencyBand.dim2(3)
        spec = SymbolSpec(2.0, LengthScaleField.constant(2.0, grid))
        with pytest.raises(NotImplementedError):
            parametrix_expand(spec, grid, band, 1)

    def test_stability_cap(self):
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        with pytest.raises(ValueError, match="stability cap"):
            parametrix_expand(spec, GRID65, BAND64, 7)

    def test_instability_detected(self, monkeypatch):
        import torusprior.symbols as symbols_mod
        monkeypatch.setattr(symbols_mod, "INSTABILITY_FACTOR", 1e-9)
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        with pytest.raises(ParametrixInstabilityError):
            parametrix_expand(spec, GRID65, BAND64, 2)


class TestTermNorms:
    def test_constant_sigma_tail_norms_zero(self):
        spec = SymbolSpec(2.0, LengthScaleField.constant(1.0, GRID65))
        norms = term_norms(parametrix_expand(spec, GRID65, BAND64, 3))
        assert norms[0] > 0
        assert all(n == 0.0 for n in norms[1:])

    def test_norms_reproducible(self):
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        a = term_norms(parametrix_expand(spec, GRID65, BAND64, 2))
        b = term_norms(parametrix_expand(spec, GRID65, BAND64, 2))
        assert a == b


class TestTruncationBound:
    def test_rate_ratio(self):
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        for M in (8, 16, 32):
            ratio = truncation_error_bound(spec, M) \
                / truncation_error_bound(spec, 2 * M)
            assert abs(ratio - 8.0) < 0.8

    def test_leading_factor_at_most_one_for_unit_prefactor(self):
        # the 2D hierarchical setup uses q = 1/p with prefactor one
        grid = SpatialGrid(2, 16)
        sigma = LengthScaleField.constant(10.0 ** 2.5, grid)
        spec = SymbolSpec(2.0, sigma)
        leading, _ = truncation_bound_parts(spec, 8)
        assert leading <= 1.0

    def test_bound_dominates_direct_tail(self):
        spec = SymbolSpec(2.0, paper_bump_sigma(GRID65))
        sig = spec.sigma.values
        for M in (8, 16, 32):
            eta = np.arange(M + 1, 100_000)
            tail = 2 * np.max(
                np.sum((sig[:, None] + eta[None, :] ** 2.0) ** -2, axis=1))
            assert tail <= truncation_error_bound(spec, M)

    def test_divergent_parameters_rejected(self):
        spec = SymbolSpec(0.5, paper_bump_sigma(GRID65))
        with pytest.raises(ValueError, match="diverges"):
            truncation_error_bound(spec, 4)
