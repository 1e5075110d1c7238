"""Grids, truncated frequency bands and tensors on the d-torus (d = 1, 2).

All fields live on the periodic unit cube [0, 1)^d with equispaced nodes
x_i = i / N per axis.  Frequency bands are finite boxes of integer
multi-indices; 1D bands follow the half-open convention [-N, N-1] while 2D
bands are the closed symmetric product [-N, N]^2, so that Hermitian pairing
is exact except for the single 1D edge mode.

Enumeration order is fixed: multi-indices are listed row-major with each
component ascending.  Every tensor in this package indexes frequencies in
that order, which makes serialization deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class SpatialGrid:
    """Equispaced periodic grid on [0, 1)^d with N nodes per axis."""

    dim: int
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.points_per_axis < 1:
            raise ValueError("points_per_axis must be positive")

    @property
    def spacing(self) -> float:
        return 1.0 / self.points_per_axis

    @property
    def n_nodes(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def axis_nodes(self) -> np.ndarray:
        """Coordinates i/N along one axis."""
        return np.arange(self.points_per_axis) / self.points_per_axis

    def node_coords(self) -> np.ndarray:
        """All node coordinates, shape (n_nodes, dim), row-major."""
        t = self.axis_nodes
        if self.dim == 1:
            return t[:, None]
        xx, yy = np.meshgrid(t, t, indexing="ij")
        return np.stack([xx.ravel(), yy.ravel()], axis=1)

    def reshape(self, values: np.ndarray) -> np.ndarray:
        """View a flat node vector as the (N,)*dim array."""
        return np.asarray(values).reshape((self.points_per_axis,) * self.dim)


@dataclass(frozen=True)
class FrequencyBand:
    """Box of integer multi-indices, inclusive per-axis ranges [lo, hi]."""

    dim: int
    los: tuple
    his: tuple
    half_width: int = 0

    @classmethod
    def dim1(cls, half_width: int) -> "FrequencyBand":
        """1D band [-N, N-1], the convention eta_i = i - N."""
        if half_width < 1:
            raise ValueError("half_width must be positive")
        return cls(1, (-half_width,), (half_width - 1,), half_width)

    @classmethod
    def dim2(cls, half_width: int) -> "FrequencyBand":
        """2D symmetric product band [-N, N]^2."""
        if half_width < 1:
            raise ValueError("half_width must be positive")
        return cls(2, (-half_width, -half_width), (half_width, half_width), half_width)

    def __post_init__(self):
        if len(self.los) != self.dim or len(self.his) != self.dim:
            raise ValueError("los/his length must equal dim")
        for lo, hi in zip(self.los, self.his):
            if hi < lo:
                raise ValueError("empty band axis")

    @property
    def axis_sizes(self) -> tuple:
        return tuple(hi - lo + 1 for lo, hi in zip(self.los, self.his))

    @property
    def n_freq(self) -> int:
        return int(np.prod(self.axis_sizes))

    @cached_property
    def multi_indices(self) -> np.ndarray:
        """All multi-indices, shape (n_freq, dim), row-major ascending."""
        axes = [np.arange(lo, hi + 1) for lo, hi in zip(self.los, self.his)]
        if self.dim == 1:
            return axes[0][:, None].copy()
        a, b = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.stack([a.ravel(), b.ravel()], axis=1)

    @cached_property
    def abs_sq(self) -> np.ndarray:
        """|eta|^2 per frequency (int array)."""
        mi = self.multi_indices
        return np.sum(mi * mi, axis=1)

    def contains(self, eta) -> bool:
        eta = np.atleast_1d(eta)
        return all(lo <= e <= hi for e, lo, hi in zip(eta, self.los, self.his))

    def index_of(self, eta) -> int:
        """Position of a multi-index in the enumeration order."""
        eta = np.atleast_1d(eta)
        if not self.contains(eta):
            raise ValueError(f"{tuple(eta)} not in band")
        idx = 0
        stride = 1
        for e, lo, sz in zip(reversed(eta), reversed(self.los), reversed(self.axis_sizes)):
            idx += (int(e) - lo) * stride
            stride *= sz
        return idx

    @cached_property
    def mirror_index(self) -> np.ndarray:
        """Position of -eta per frequency, or -1 when -eta is outside the band."""
        out = np.full(self.n_freq, -1, dtype=np.int64)
        strides = np.ones(self.dim, dtype=np.int64)
        for ax in range(self.dim - 2, -1, -1):
            strides[ax] = strides[ax + 1] * self.axis_sizes[ax + 1]
        mi = self.multi_indices
        neg = -mi
        ok = np.ones(self.n_freq, dtype=bool)
        for ax in range(self.dim):
            ok &= (neg[:, ax] >= self.los[ax]) & (neg[:, ax] <= self.his[ax])
        pos = np.zeros(self.n_freq, dtype=np.int64)
        for ax in range(self.dim):
            pos += (neg[:, ax] - self.los[ax]) * strides[ax]
        out[ok] = pos[ok]
        return out

    @cached_property
    def hermitian_structure(self) -> dict:
        """Index arrays for Hermitian pairing in enumeration order.

        zero: position of eta = 0 (or -1), pairs: (canonical, mirror)
        positions with the canonical member appearing first in enumeration
        order, selfs: positions of modes whose mirror lies outside the band
        (the 1D edge mode -N); those are drawn real and synthesize through
        the real part of their complex-exponential term.
        """
        mirror = self.mirror_index
        zero = -1
        pairs_a, pairs_b, selfs = [], [], []
        for j in range(self.n_freq):
            m = mirror[j]
            if m == j:
                zero = j
            elif m < 0:
                selfs.append(j)
            elif j < m:
                pairs_a.append(j)
                pairs_b.append(int(m))
        return {
            "zero": zero,
            "pairs_a": np.array(pairs_a, dtype=np.int64),
            "pairs_b": np.array(pairs_b, dtype=np.int64),
            "selfs": np.array(selfs, dtype=np.int64),
        }

    def extended(self, extra: int) -> "FrequencyBand":
        """Band widened by `extra` on both ends of every axis."""
        return FrequencyBand(
            self.dim,
            tuple(lo - extra for lo in self.los),
            tuple(hi + extra for hi in self.his),
            self.half_width,
        )

    def metadata(self) -> dict:
        return {"dim": self.dim, "los": list(self.los), "his": list(self.his),
                "half_width": self.half_width}


@dataclass
class SpectralTensor:
    """Complex tensor indexed by (spatial node, frequency multi-index)."""

    grid: SpatialGrid
    band: FrequencyBand
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        expected = (self.grid.n_nodes, self.band.n_freq)
        if self.values.shape != expected:
            raise ValueError(f"tensor shape {self.values.shape} != {expected}")
        if not np.all(np.isfinite(self.values.view(np.float64))):
            raise ValueError("tensor contains non-finite entries")

    @property
    def shape(self) -> tuple:
        return self.values.shape


@dataclass
class FieldSample:
    """Real-valued field on a spatial grid (one value per node, row-major)."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"field length {self.values.shape} != ({self.grid.n_nodes},)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def as_array(self) -> np.ndarray:
        return self.grid.reshape(self.values)
