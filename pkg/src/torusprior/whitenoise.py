"""Truncated toroidal Gaussian white noise in the Fourier domain.

A spectrum is a Hermitian complex coefficient vector over a frequency band:
w_0 ~ N(0,1) real; each unordered pair {eta, -eta} gets w_eta = (a+ib)/sqrt(2)
with a, b iid N(0,1) and w_{-eta} the conjugate; modes without a mirror in
the band (the 1D edge mode) are drawn real N(0,1).

The real parameter vector behind a spectrum ("whitened coordinates") is an
isometry: sum_eta |w_eta|^2 equals the squared parameter norm, and pairing
with a Hermitian test vector equals the Euclidean pairing of parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grids import FrequencyBand

RNG_ALGORITHM = "pcg64-seedsequence"


@dataclass(frozen=True)
class RngSeed:
    """Reproducible stream address: (seed, stream_id) -> independent draws."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def metadata(self) -> dict:
        return {"seed": int(self.seed), "stream_id": int(self.stream_id),
                "algorithm": RNG_ALGORITHM}


class HermitianLayout:
    """Bijection between real parameters and Hermitian band coefficients.

    Parameter order follows the band enumeration: eta = 0 contributes one
    slot, each canonical pair (first member in enumeration order) two slots
    (a, b), each self-conjugate mode one slot.
    """

    def __init__(self, band: FrequencyBand):
        self.band = band
        hs = band.hermitian_structure
        self.zero = hs["zero"]
        self.pairs_a = hs["pairs_a"]
        self.pairs_b = hs["pairs_b"]
        self.selfs = hs["selfs"]
        self_set = set(self.selfs.tolist())
        mirror = band.mirror_index
        real_slots = np.full(band.n_freq, -1, dtype=np.int64)  # slot of Re-part param
        imag_slots = np.full(band.n_freq, -1, dtype=np.int64)
        off = 0
        for j in range(band.n_freq):
            if j == self.zero or j in self_set:
                real_slots[j] = off
                off += 1
            elif j < mirror[j]:
                real_slots[j] = off
                imag_slots[j] = off + 1
                off += 2
        self.n_params = off
        self._real_slots = real_slots
        self._imag_slots = imag_slots

    def to_coeffs(self, params: np.ndarray) -> np.ndarray:
        """Real parameters -> Hermitian complex coefficients (batched on axis 0)."""
        params = np.asarray(params, dtype=np.float64)
        squeeze = params.ndim == 1
        P = params[None, :] if squeeze else params
        if P.shape[-1] != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {P.shape[-1]}")
        w = np.zeros(P.shape[:-1] + (self.band.n_freq,), dtype=np.complex128)
        if self.zero >= 0:
            w[..., self.zero] = P[..., self._real_slots[self.zero]]
        if self.selfs.size:
            w[..., self.selfs] = P[..., self._real_slots[self.selfs]]
        if self.pairs_a.size:
            a = P[..., self._real_slots[self.pairs_a]]
            b = P[..., self._imag_slots[self.pairs_a]]
            w[..., self.pairs_a] = (a + 1j * b) / np.sqrt(2.0)
            w[..., self.pairs_b] = (a - 1j * b) / np.sqrt(2.0)
        return w[0] if squeeze else w

    def from_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Inverse of to_coeffs for Hermitian input; also the layout adjoint."""
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        squeeze = coeffs.ndim == 1
        W = coeffs[None, :] if squeeze else coeffs
        if W.shape[-1] != self.band.n_freq:
            raise ValueError("coefficient/band size mismatch")
        P = np.zeros(W.shape[:-1] + (self.n_params,), dtype=np.float64)
        if self.zero >= 0:
            P[..., self._real_slots[self.zero]] = W[..., self.zero].real
        if self.selfs.size:
            P[..., self._real_slots[self.selfs]] = W[..., self.selfs].real
        if self.pairs_a.size:
            P[..., self._real_slots[self.pairs_a]] = np.sqrt(2.0) * W[..., self.pairs_a].real
            P[..., self._imag_slots[self.pairs_a]] = np.sqrt(2.0) * W[..., self.pairs_a].imag
        return P[0] if squeeze else P


@lru_cache(maxsize=32)
def layout_for(band: FrequencyBand) -> HermitianLayout:
    return HermitianLayout(band)


@dataclass
class WhiteNoiseSpectrum:
    """Hermitian white-noise Fourier coefficients over a band."""

    band: FrequencyBand
    coeffs: np.ndarray
    seed: RngSeed | None = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (self.band.n_freq,):
            raise ValueError("coefficient/band size mismatch")

    def params(self) -> np.ndarray:
        return layout_for(self.band).from_coeffs(self.coeffs)


def sample_white_noise(band: FrequencyBand, seed: RngSeed) -> WhiteNoiseSpectrum:
    """Draw one truncated white-noise spectrum; pure function of (band, seed)."""
    layout = layout_for(band)
    rng = seed.generator()
    params = rng.standard_normal(layout.n_params)
    return WhiteNoiseSpectrum(band, layout.to_coeffs(params), seed)


def sample_white_noise_params(band: FrequencyBand, seed: RngSeed, n: int) -> np.ndarray:
    """n independent whitened parameter vectors, shape (n, n_params)."""
    layout = layout_for(band)
    rng = seed.generator()
    return rng.standard_normal((n, layout.n_params))


def pair_with_test_function(noise: WhiteNoiseSpectrum, f_coeffs: np.ndarray) -> float:
    """Truncated Plancherel pairing <Psi, f> = Re sum_eta w_eta conj(f_eta).

    `f_coeffs` must be Hermitian (a real test function) on the same band.
    """
    f_coeffs = np.asarray(f_coeffs, dtype=np.complex128)
    if f_coeffs.shape != (noise.band.n_freq,):
        raise ValueError("test function band mismatch")
    mirror = noise.band.mirror_index
    ok = mirror >= 0
    if not np.allclose(f_coeffs[ok], np.conj(f_coeffs[mirror[ok]]), rtol=0, atol=1e-12):
        raise ValueError("test function coefficients are not Hermitian")
    return float(np.real(np.sum(noise.coeffs * np.conj(f_coeffs))))
