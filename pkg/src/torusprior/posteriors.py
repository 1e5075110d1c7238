"""Whitened-coordinate posteriors with analytic gradients.

Every posterior exposes log_posterior(S) and gradient(S) over a real
parameter vector S of white-noise coordinates, with density

    log p(S | y) = -||y - G(S)||^2 / (2 sigma_noise^2) - ||S||^2 / 2

up to a constant.  The 1/2 on the prior term is used for every block,
including the hierarchical case (standard Gaussian whitening).

Gradients are exact adjoint compositions: observation adjoint, sigmoid
derivative, the linear spectral prior map's adjoint, and (for the joint
hierarchical posterior) the analytic derivative of the symbol and of the
normalization sum with respect to the exponent field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .grids import FieldSample, SpatialGrid
from .radon import RadonGeometry, radon_matrix
from .samplers import (HierarchicalSpec, LevelSetSpec, hierarchical_prior_matrix,
                       hyper_symbol, prior_map_matrix, shells_for)
from .transforms import synthesize_real
from .whitenoise import layout_for


def log_posterior(post, S: np.ndarray) -> float:
    """Whitened log-density (constant dropped) of any posterior object."""
    return post.log_posterior(S)


def gradient(post, S: np.ndarray) -> np.ndarray:
    """Exact gradient of the whitened log-density."""
    return post.gradient(S)


class StandardNormalPosterior:
    """Pure whitened prior (G = 0); the NUTS calibration target."""

    def __init__(self, n_params: int):
        self.n_params = n_params

    def log_posterior(self, S: np.ndarray) -> float:
        return -0.5 * float(S @ S)

    def gradient(self, S: np.ndarray) -> np.ndarray:
        return -np.asarray(S, dtype=np.float64)

    def value_and_grad(self, S: np.ndarray):
        S = np.asarray(S, dtype=np.float64)
        return -0.5 * float(S @ S), -S


class DenoisingPosterior:
    """Linear prior map xi = B S observed pointwise under Gaussian noise."""

    def __init__(self, B: np.ndarray, obs_indices: np.ndarray, y: np.ndarray,
                 sigma_noise: float):
        self.B = np.ascontiguousarray(B, dtype=np.float64)
        self.obs = np.asarray(obs_indices, dtype=np.int64)
        self.y = np.asarray(y, dtype=np.float64)
        if self.y.shape != (self.obs.size,):
            raise ValueError("data length must match observation indices")
        if sigma_noise <= 0:
            raise ValueError("sigma_noise must be positive")
        self.sigma_noise = float(sigma_noise)
        self.n_params = self.B.shape[1]
        self._Bobs = np.ascontiguousarray(self.B[self.obs])
        self._BobsT = np.ascontiguousarray(self._Bobs.T)

    def push_forward(self, S: np.ndarray) -> np.ndarray:
        return self.B @ np.asarray(S, dtype=np.float64)

    def residual(self, S: np.ndarray) -> np.ndarray:
        return self.y - self._Bobs @ np.asarray(S, dtype=np.float64)

    def log_posterior(self, S: np.ndarray) -> float:
        S = np.asarray(S, dtype=np.float64)
        r = self.residual(S)
        val = -0.5 * float(r @ r) / self.sigma_noise ** 2 - 0.5 * float(S @ S)
        if not math.isfinite(val):
            raise FloatingPointError("non-finite log-posterior")
        return val

    def gradient(self, S: np.ndarray) -> np.ndarray:
        S = np.asarray(S, dtype=np.float64)
        r = self.residual(S)
        return self._BobsT @ r / self.sigma_noise ** 2 - S

    def value_and_grad(self, S: np.ndarray):
        S = np.asarray(S, dtype=np.float64)
        r = self.residual(S)
        val = -0.5 * float(r @ r) / self.sigma_noise ** 2 - 0.5 * float(S @ S)
        grad = self._BobsT @ r / self.sigma_noise ** 2 - S
        return val, grad


def denoising_posterior(q_rows: np.ndarray, band, grid: SpatialGrid,
                        y: np.ndarray, sigma_noise: float,
                        obs_indices=None) -> DenoisingPosterior:
    """Assemble the 1D denoising posterior from a parametrix symbol tensor."""
    B = prior_map_matrix(q_rows, band, grid)
    if obs_indices is None:
        obs_indices = np.arange(grid.n_nodes)
    return DenoisingPosterior(B, obs_indices, y, sigma_noise)


LN10 = math.log(10.0)


class HierarchicalCTPosterior:
    """Limited-angle CT with the hierarchical level-set prior.

    Parameters are S = S1 (+) S2 in joint mode, or S2 alone when the
    exponent field sigma is pinned (fixed_sigma mode, used for posterior
    sampling after the MAP).  Forward chain:

        S1 -> sigma -> theta = 10^(a3 + sigma)
        S2 -> u(x)  = sum_eta (theta + |eta|^2)^(-1) w2_eta e^(i2pi eta.x)
        xi = u / c(theta),  c^2 = sum_eta (theta + |eta|^2)^(-2)
        field = sigmoid(k xi),   y_pred = R field.
    """

    def __init__(self, hspec: HierarchicalSpec, geom: RadonGeometry,
                 level: LevelSetSpec, y: np.ndarray, sigma_noise: float,
                 fixed_sigma: np.ndarray | None = None):
        self.hspec = hspec
        self.geom = geom
        self.level = level
        self.y = np.asarray(y, dtype=np.float64).ravel()
        if sigma_noise <= 0:
            raise ValueError("sigma_noise must be positive")
        self.sigma_noise = float(sigma_noise)
        self.R = radon_matrix(geom, hspec.grid)
        if self.y.size != self.R.shape[0]:
            raise ValueError("data length does not match geometry")
        self.layout = layout_for(hspec.band)
        self.shells = shells_for(hspec.band, hspec.grid)
        self.n_block = self.layout.n_params
        self.fixed_sigma = None if fixed_sigma is None \
            else np.asarray(fixed_sigma, dtype=np.float64)
        self.n_params = self.n_block if self.fixed_sigma is not None \
            else 2 * self.n_block
        self._hyper = hyper_symbol(hspec)
        self._B2 = None
        if self.fixed_sigma is not None:
            self._B2 = hierarchical_prior_matrix(hspec, self.fixed_sigma)
            self._B2T = np.ascontiguousarray(self._B2.T)

    # -- parameter blocks ---------------------------------------------------

    def split(self, S: np.ndarray):
        S = np.asarray(S, dtype=np.float64)
        if S.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters")
        if self.fixed_sigma is not None:
            return None, S
        return S[: self.n_block], S[self.n_block:]

    def sigma_of(self, S1: np.ndarray | None) -> np.ndarray:
        if self.fixed_sigma is not None:
            return self.fixed_sigma
        w1 = self.layout.to_coeffs(S1)
        return synthesize_real(self._hyper * w1, self.hspec.band, self.hspec.grid)

    # -- forward ------------------------------------------------------------

    def forward_fields(self, S: np.ndarray) -> dict:
        S1, S2 = self.split(S)
        sigma = self.sigma_of(S1)
        if self._B2 is not None:
            xi = self._B2 @ S2
            out = {"sigma": sigma, "xi": xi}
        else:
            theta = 10.0 ** (self.hspec.a3 + sigma)
            w2 = self.layout.to_coeffs(S2)
            H = self.shells.synthesize(w2)
            d1 = 1.0 / (theta[:, None] + self.shells.r_values[None, :])
            u = np.einsum("ik,ki->i", d1, H)
            c_sq = np.sum(self.shells.multiplicity[None, :] * d1 * d1, axis=1)
            c = np.sqrt(c_sq)
            xi = u / c
            out = {"sigma": sigma, "theta": theta, "H": H, "d1": d1,
                   "u": u, "c": c, "xi": xi}
        out["field"] = expit(self.level.k * out["xi"])
        out["y_pred"] = self.R @ out["field"]
        return out

    def push_forward(self, S: np.ndarray) -> np.ndarray:
        return self.forward_fields(S)["field"]

    def log_posterior(self, S: np.ndarray) -> float:
        S = np.asarray(S, dtype=np.float64)
        f = self.forward_fields(S)
        r = self.y - f["y_pred"]
        val = -0.5 * float(r @ r) / self.sigma_noise ** 2 - 0.5 * float(S @ S)
        if not math.isfinite(val):
            raise FloatingPointError("non-finite log-posterior")
        return val

    # -- gradient -----------------------------------------------------------

    def gradient(self, S: np.ndarray) -> np.ndarray:
        return self.value_and_grad(S)[1]

    def value_and_grad(self, S: np.ndarray):
        """One shared forward pass for the log-density and its gradient."""
        S = np.asarray(S, dtype=np.float64)
        f = self.forward_fields(S)
        r = self.y - f["y_pred"]
        val = -0.5 * float(r @ r) / self.sigma_noise ** 2 - 0.5 * float(S @ S)
        if not math.isfinite(val):
            raise FloatingPointError("non-finite log-posterior")
        return val, self._gradient_from_fields(S, f, r)

    def _gradient_from_fields(self, S, f, r) -> np.ndarray:
        g_field = (self.R.T @ r) / self.sigma_noise ** 2
        fld = f["field"]
        g_xi = g_field * self.level.k * fld * (1.0 - fld)

        if self._B2 is not None:
            return self._B2T @ g_xi - S

        S1, S2 = self.split(S)
        theta, H, d1, u, c = f["theta"], f["H"], f["d1"], f["u"], f["c"]
        # S2 path: xi linear in the shell syntheses
        g_H = (d1 * (g_xi / c)[:, None]).T
        G2 = self.shells.adjoint(g_H)
        grad2 = self.layout.from_coeffs(G2) - S2
        # sigma path: d xi / d theta = -v2/c + u t3 / c^3, theta' = ln10 theta
        d2 = d1 * d1
        v2 = np.einsum("ik,ki->i", d2, H)
        t3 = np.sum(self.shells.multiplicity[None, :] * d2 * d1, axis=1)
        dxi_dtheta = -v2 / c + u * t3 / c ** 3
        g_sigma = g_xi * dxi_dtheta * LN10 * theta
        # sigma = Re synthesis of hyper * w1: adjoint via analysis transform
        grid = self.hspec.grid
        spec = np.fft.fftn(grid.reshape(g_sigma))
        n = grid.points_per_axis
        mi = self.hspec.band.multi_indices
        flat_bins = np.zeros(self.hspec.band.n_freq, dtype=np.int64)
        stride = 1
        for ax in range(grid.dim - 1, -1, -1):
            flat_bins += np.mod(mi[:, ax], n) * stride
            stride *= n
        G1 = self._hyper * spec.ravel()[flat_bins]
        grad1 = self.layout.from_coeffs(G1) - S1
        return np.concatenate([grad1, grad2])
