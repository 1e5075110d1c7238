"""Inhomogeneous symbol evaluation and truncated parametrix expansion.

The operator symbol is p(x, eta) = c(x) (sigma(x) + |eta|^2)^(alpha/2).
Its approximate inverse is built recursively from spatial derivative
tensors P^gamma = D_x^(gamma) p and forward frequency differences:

    Q^0 = 1 / P^0,
    Q^N = -Q^0 * sum_{0 <= k < N, |gamma| = N-k} (1/gamma!)
              (Delta_eta^gamma Q^k) * P^gamma        (elementwise).

Derivative tensors are evaluated exactly when sigma carries a closed form
(the discretized symbol of the continuous operator) and spectrally
otherwise.  Each summand is replaced by its Hermitian part in eta, which
restores the reality condition q(x, eta) = conj(q(x, -eta)) that forward
differences break near eta = 0; subsequent recursion steps consume the
symmetrized iterates.  All internal work happens on a symmetric band wide
enough that order-N differences and mirror lookups stay in range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .grids import FieldSample, FrequencyBand, SpatialGrid, SpectralTensor
from .transforms import analyze_on_grid, evaluate_fourier_series, spectral_derivative

X_SYMBOL, Y_SYMBOL, ETA_SYMBOL = sp.symbols("x y eta")

STABILITY_CAP = 6
INSTABILITY_FACTOR = 1e12


class EllipticityError(ValueError):
    """The base symbol is not bounded away from zero."""


class ParametrixInstabilityError(RuntimeError):
    """Recursion produced runaway entries (large truncation index)."""


@dataclass
class LengthScaleField:
    """Positive length-scale field sigma(x), optionally with a closed form.

    `closed_form` is a sympy expression in x (1D) or (x, y) (2D); when
    present, symbol derivatives are evaluated from it exactly.
    """

    grid: SpatialGrid
    values: np.ndarray
    closed_form: sp.Expr | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError("sigma length must equal node count")
        if not np.all(np.isfinite(self.values)) or self.values.min() <= 0:
            raise ValueError("sigma must be finite and strictly positive")

    @classmethod
    def from_expression(cls, expr: sp.Expr, grid: SpatialGrid) -> "LengthScaleField":
        expr = sp.sympify(expr)
        coords = grid.node_coords()
        if grid.dim == 1:
            f = sp.lambdify(X_SYMBOL, expr, "numpy")
            vals = np.asarray(f(coords[:, 0]), dtype=np.float64)
        else:
            f = sp.lambdify((X_SYMBOL, Y_SYMBOL), expr, "numpy")
            vals = np.asarray(f(coords[:, 0], coords[:, 1]), dtype=np.float64)
        vals = np.broadcast_to(vals, (grid.n_nodes,)).copy()
        return cls(grid, vals, expr)

    @classmethod
    def constant(cls, value: float, grid: SpatialGrid) -> "LengthScaleField":
        return cls(grid, np.full(grid.n_nodes, float(value)), sp.Float(value))


def paper_bump_sigma(grid: SpatialGrid) -> LengthScaleField:
    """The reference 1D profile 0.05 + 2 exp(-(x - 1/2)^2 / 0.5)."""
    expr = sp.Rational(1, 20) + 2 * sp.exp(-((X_SYMBOL - sp.Rational(1, 2)) ** 2) * 2)
    return LengthScaleField.from_expression(expr, grid)


@dataclass
class SymbolSpec:
    """Symbol p(x, eta) = prefactor(x) (sigma(x) + |eta|^2)^(alpha/2)."""

    alpha: float
    sigma: LengthScaleField
    prefactor: float | np.ndarray = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if np.isscalar(self.prefactor):
            if self.prefactor <= 0:
                raise ValueError("prefactor must be strictly positive")
        else:
            self.prefactor = np.asarray(self.prefactor, dtype=np.float64)
            if self.prefactor.shape != (self.sigma.grid.n_nodes,):
                raise ValueError("prefactor field length must equal node count")
            if self.prefactor.min() <= 0:
                raise ValueError("prefactor must be strictly positive")

    @property
    def grid(self) -> SpatialGrid:
        return self.sigma.grid

    def prefactor_values(self) -> np.ndarray:
        if np.isscalar(self.prefactor):
            return np.full(self.grid.n_nodes, float(self.prefactor))
        return self.prefactor

    def min_prefactor(self) -> float:
        return float(self.prefactor) if np.isscalar(self.prefactor) \
            else float(self.prefactor.min())


def _sigma_at(spec: SymbolSpec, x: np.ndarray) -> float:
    """sigma at an arbitrary point: closed form if available, else the
    trigonometric interpolant of the grid samples."""
    grid = spec.grid
    if spec.sigma.closed_form is not None:
        if grid.dim == 1:
            return float(sp.lambdify(X_SYMBOL, spec.sigma.closed_form, "numpy")(x[0]))
        return float(sp.lambdify((X_SYMBOL, Y_SYMBOL), spec.sigma.closed_form,
                                 "numpy")(x[0], x[1]))
    n = grid.points_per_axis
    half = n // 2
    band = FrequencyBand(grid.dim, (-half,) * grid.dim,
                         (n - 1 - half,) * grid.dim, half)
    coeffs = analyze_on_grid(spec.sigma.values, grid, band)
    return float(np.real(evaluate_fourier_series(coeffs, band, x)))


def eval_symbol(spec: SymbolSpec, x, eta) -> float:
    """p(x, eta) = prefactor(x) (sigma(x) + |eta|^2)^(alpha/2) at one point."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    eta = np.atleast_1d(np.asarray(eta, dtype=np.float64))
    sig = _sigma_at(spec, x)
    if np.isscalar(spec.prefactor):
        pref = float(spec.prefactor)
    else:
        # prefactor fields are grid-sampled; evaluate at the nearest node
        coords = spec.grid.node_coords()
        i = int(np.argmin(np.sum((coords - x[None, :]) ** 2, axis=1)))
        pref = float(spec.prefactor[i])
    return pref * (sig + float(np.sum(eta ** 2))) ** (spec.alpha / 2.0)


def symbol_on(spec: SymbolSpec, band: FrequencyBand) -> np.ndarray:
    """p evaluated on (grid nodes x band), shape (n_nodes, n_freq), real."""
    abs_sq = band.abs_sq.astype(np.float64)
    vals = (spec.sigma.values[:, None] + abs_sq[None, :]) ** (spec.alpha / 2.0)
    return spec.prefactor_values()[:, None] * vals


@dataclass
class SymbolDerivativeTensor:
    """Discretized D_x^(gamma) p over (space x frequency)."""

    gamma: tuple
    tensor: SpectralTensor


def _analytic_columns(spec: SymbolSpec, band: FrequencyBand, gamma: int) -> np.ndarray:
    """D_x^(gamma) p from the closed form of sigma (1D), exact in x."""
    p_expr = (spec.sigma.closed_form + ETA_SYMBOL ** 2) ** (sp.nsimplify(spec.alpha) / 2)
    g = p_expr
    for j in range(gamma):
        g = sp.diff(g, X_SYMBOL) / (2 * sp.pi * sp.I) - j * g
    f = sp.lambdify((X_SYMBOL, ETA_SYMBOL), g, "numpy")
    x = spec.grid.node_coords()[:, 0]
    eta = band.multi_indices[:, 0].astype(np.float64)
    E, X = np.meshgrid(eta, x)
    out = np.asarray(f(X, E), dtype=np.complex128)
    out = np.broadcast_to(out, (spec.grid.n_nodes, band.n_freq)).copy()
    if not np.isscalar(spec.prefactor):
        raise ValueError("analytic derivatives require a constant prefactor")
    return float(spec.prefactor) * out


def _spectral_columns(spec: SymbolSpec, band: FrequencyBand, gamma: tuple) -> np.ndarray:
    cols = symbol_on(spec, band).astype(np.complex128)
    return spectral_derivative(cols, spec.grid, gamma)


def _derivative_columns(spec: SymbolSpec, band: FrequencyBand, gamma: tuple,
                        method: str) -> np.ndarray:
    total = int(sum(gamma))
    if total == 0:
        return symbol_on(spec, band).astype(np.complex128)
    use_analytic = method == "analytic" or (
        method == "auto" and spec.grid.dim == 1
        and spec.sigma.closed_form is not None and np.isscalar(spec.prefactor))
    if use_analytic:
        if spec.grid.dim != 1:
            raise ValueError("analytic derivative path is 1D only")
        if spec.sigma.closed_form is None:
            raise ValueError("analytic derivatives need a closed-form sigma")
        return _analytic_columns(spec, band, total)
    return _spectral_columns(spec, band, gamma)


def _multi_indices_up_to(dim: int, max_total: int) -> list:
    if dim == 1:
        return [(g,) for g in range(max_total + 1)]
    out = []
    for total in range(max_total + 1):
        for g1 in range(total + 1):
            out.append((g1, total - g1))
    return out


def build_derivative_tensors(spec: SymbolSpec, grid: SpatialGrid, band: FrequencyBand,
                             max_gamma: int, method: str = "auto") -> list:
    """All tensors P^gamma for |gamma| <= max_gamma on the given band.

    method: "auto" (closed form when available, else spectral),
    "analytic" or "spectral".
    """
    if max_gamma > 8:
        raise ValueError("max_gamma must be <= 8")
    if grid != spec.grid:
        raise ValueError("grid must match the sigma field's grid")
    out = []
    for gamma in _multi_indices_up_to(grid.dim, max_gamma):
        cols = _derivative_columns(spec, band, gamma, method)
        out.append(SymbolDerivativeTensor(gamma, SpectralTensor(grid, band, cols)))
    return out


def finite_difference(tensor: SpectralTensor, gamma) -> SpectralTensor:
    """Order-gamma forward difference along the frequency axes.

    The output band shrinks by gamma_k at the upper end of axis k; the
    input must carry enough overhead nodes.
    """
    gamma = tuple(int(g) for g in np.atleast_1d(gamma))
    band = tensor.band
    if len(gamma) != band.dim:
        raise ValueError("gamma length must equal band dim")
    if any(g < 0 for g in gamma):
        raise ValueError("difference order components must be non-negative")
    for g, sz in zip(gamma, band.axis_sizes):
        if sz - g < 1:
            raise ValueError("insufficient overhead nodes for this difference order")
    vals = tensor.values.reshape((tensor.grid.n_nodes,) + band.axis_sizes)
    for ax, g in enumerate(gamma):
        if g:
            vals = np.diff(vals, n=g, axis=1 + ax)
    new_band = FrequencyBand(band.dim, band.los,
                             tuple(hi - g for hi, g in zip(band.his, gamma)),
                             band.half_width)
    return SpectralTensor(tensor.grid, new_band,
                          vals.reshape(tensor.grid.n_nodes, -1))


@dataclass
class ParametrixTensor:
    """Summands Q^0..Q^N and the partial sum q^(N) on the target band."""

    spec: SymbolSpec
    band: FrequencyBand
    truncation_order: int
    summands: list = field(default_factory=list)

    @property
    def partial_sum(self) -> SpectralTensor:
        total = sum(s.values for s in self.summands)
        return SpectralTensor(self.summands[0].grid, self.band, total)

    def partial_sum_up_to(self, n: int) -> SpectralTensor:
        total = sum(s.values for s in self.summands[: n + 1])
        return SpectralTensor(self.summands[0].grid, self.band, total)


def _restrict_1d(values: np.ndarray, lo_src: int, band: FrequencyBand) -> np.ndarray:
    i0 = band.los[0] - lo_src
    return values[:, i0:i0 + band.n_freq]


def parametrix_expand(spec: SymbolSpec, grid: SpatialGrid, band: FrequencyBand,
                      N: int, method: str = "auto",
                      stability_cap: int = STABILITY_CAP) -> ParametrixTensor:
    """Truncated parametrix q^(N) = sum_k Q^k of the symbol's inverse.

    For constant sigma every Q^k with k >= 1 vanishes and q^(N) is the
    elementwise reciprocal of P^0.  Raises ParametrixInstabilityError when
    the recursion produces entries larger than 1e12 x max|Q^0| (large
    truncation indices are numerically unstable) and EllipticityError when
    the base symbol degenerates.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    if N > stability_cap:
        raise ValueError(f"N={N} exceeds the stability cap {stability_cap}")
    if grid != spec.grid:
        raise ValueError("grid must match the sigma field's grid")
    if band.dim != grid.dim:
        raise ValueError("grid/band dimension mismatch")

    p0 = symbol_on(spec, band)
    if np.min(np.abs(p0)) <= 0 or not np.all(np.isfinite(p0)):
        raise EllipticityError("base symbol is not elliptic on this band")

    if N == 0 or band.dim == 2:
        if N > 0:
            raise NotImplementedError(
                "parametrix truncation orders N >= 1 are 1D only")
        q0 = SpectralTensor(grid, band, (1.0 / p0).astype(np.complex128))
        return ParametrixTensor(spec, band, 0, [q0])

    # 1D recursion on the symmetric internal band [-L, L]
    L = max(abs(band.los[0]), abs(band.his[0])) + N
    lo_int = -L
    internal = FrequencyBand(1, (lo_int,), (L,), band.half_width)
    P = {0: symbol_on(spec, internal)}
    for g in range(1, N + 1):
        P[g] = _derivative_columns(spec, internal, (g,), method)

    Q = {0: (1.0 / P[0]).astype(np.complex128)}
    valid = {0: L}  # Q[k] trusted on [-valid[k], valid[k]]
    q0_max = np.abs(Q[0]).max()
    width = 2 * L + 1

    for k in range(1, N + 1):
        acc = np.zeros((grid.n_nodes, width), dtype=np.complex128)
        mk = min(valid[j] - (k - j) for j in range(k))
        for j in range(k):
            g = k - j
            block = Q[j][:, L - valid[j]:L + valid[j] + 1]
            diffs = np.diff(block, n=g, axis=1)        # spans [-valid[j], valid[j]-g]
            span_lo = -valid[j]
            start = (-mk) - span_lo
            cols = np.arange(L - mk, L + mk + 1)
            acc[:, cols] += diffs[:, start:start + cols.size] \
                / math.factorial(g) * P[g][:, cols]
        raw = np.zeros_like(acc)
        raw[:, L - mk:L + mk + 1] = (-Q[0] * acc)[:, L - mk:L + mk + 1]
        # Hermitian part in eta restores q(x, -eta) = conj(q(x, eta))
        idx = np.arange(-mk, mk + 1)
        sym = np.zeros_like(raw)
        sym[:, idx + L] = 0.5 * (raw[:, idx + L] + np.conj(raw[:, -idx + L]))
        if not np.all(np.isfinite(sym.view(np.float64))) \
                or np.abs(sym).max() > INSTABILITY_FACTOR * q0_max:
            raise ParametrixInstabilityError(
                f"parametrix recursion unstable at order k={k}")
        Q[k] = sym
        valid[k] = mk

    tensors = [SpectralTensor(grid, band, _restrict_1d(Q[k], lo_int, band))
               for k in range(N + 1)]
    return ParametrixTensor(spec, band, N, tensors)


def term_norms(par: ParametrixTensor) -> list:
    """l2 norms sqrt(dx^d sum |Q^k|^2) of the expansion terms."""
    dx_d = par.summands[0].grid.spacing ** par.summands[0].grid.dim
    return [float(np.sqrt(dx_d * np.sum(np.abs(s.values) ** 2)))
            for s in par.summands]


def _shell_counts(d: int, k_max: int) -> np.ndarray:
    """A_d(k) = #{eta in Z^d : k < |eta| <= k+1} for k = 0..k_max, exact."""
    if d == 1:
        return np.full(k_max + 1, 2, dtype=np.int64)
    r = np.arange(-(k_max + 1), k_max + 2)
    aa, bb = np.meshgrid(r, r, indexing="ij")
    norm2 = aa * aa + bb * bb
    counts = np.zeros(k_max + 1, dtype=np.int64)
    for k in range(k_max + 1):
        counts[k] = int(np.count_nonzero((norm2 > k * k) & (norm2 <= (k + 1) ** 2)))
    return counts


def truncation_bound_parts(spec: SymbolSpec, M: int) -> tuple:
    """(leading supremum factor, frequency tail sum) of the truncation bound.

    leading = sup_{x, eta} (|eta|^alpha |q0(x, eta)|)^2 <= 1/min(prefactor)^2;
    tail = sum_{k>=M} A_d(k) k^(-2 alpha) with shells counted exactly up to a
    cutoff and the remainder bounded by integral comparison.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    d = spec.grid.dim
    a = spec.alpha
    if 2 * a <= d:
        raise ValueError("bound diverges for alpha <= d/2")
    leading = (1.0 / spec.min_prefactor()) ** 2
    K = max(4 * M, M + 64)
    counts = _shell_counts(d, K)
    ks = np.arange(M, K + 1, dtype=np.float64)
    enum = float(np.sum(counts[M:] * ks ** (-2 * a)))
    if d == 1:
        rest = 2.0 * K ** (1 - 2 * a) / (2 * a - 1)
    else:
        c = math.sqrt(2) / 2
        rest = 3 * math.pi * (1 + 2 * c) * K ** (2 - 2 * a) / (2 * a - 2)
    return leading, enum + rest


def truncation_error_bound(spec: SymbolSpec, M: int) -> float:
    """Bound on the worst-node variance lost by truncating |eta| <= M.

    Scales like M^(d - 2 alpha); requires alpha > d/2.
    """
    leading, tail = truncation_bound_parts(spec, M)
    return leading * tail
