"""Chain diagnostics: effective sample size, HPD intervals, summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def autocorrelations(x: np.ndarray) -> np.ndarray:
    """Normalized autocorrelation function via FFT, lags 0..n-1."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    xc = x - x.mean()
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n].real / n
    if acov[0] <= 0:
        return np.zeros(n)
    return acov / acov[0]


def ess_flagged(x: np.ndarray) -> tuple:
    """(effective sample size, constant-chain flag).

    N / (1 + 2 sum rho_k) with Geyer's initial positive sequence: pair sums
    rho_{2m} + rho_{2m+1} are accumulated while positive.  A constant chain
    reports ESS 0 with the flag set.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 2 or np.ptp(x) == 0.0:
        return 0.0, True
    rho = autocorrelations(x)
    tau = 1.0
    m = 1
    while m + 1 < n:
        pair = rho[m] + rho[m + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
        m += 2
    return float(n / tau), False


def ess(x: np.ndarray) -> float:
    """Effective sample size of one scalar chain (0 for constant chains)."""
    return ess_flagged(x)[0]


def hpd_interval(samples: np.ndarray, mass: float = 0.95) -> tuple:
    """Shortest window over the sorted draws holding the requested mass.

    Window size is floor(mass * N) + 1 draws (capped at N); ties break to
    the lowest start index.  mass = 1 returns (min, max).
    """
    if not 0.0 < mass <= 1.0:
        raise ValueError("mass must lie in (0, 1]")
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n < 2:
        raise ValueError("need at least two draws")
    span = min(n - 1, int(np.floor(mass * n)))
    widths = x[span:] - x[: n - span]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + span])


@dataclass
class PosteriorSummary:
    """Pointwise posterior statistics of push-forward fields."""

    mean_field: np.ndarray          # mean of per-draw push-forwards
    variance_field: np.ndarray
    hpd_lo: np.ndarray
    hpd_hi: np.ndarray
    pushforward_of_mean: np.ndarray  # push-forward of the parameter mean
    map_field: np.ndarray | None = None


def posterior_summary(chain, push_forward, mass: float = 0.95,
                      map_point: np.ndarray | None = None,
                      batch: int = 256) -> PosteriorSummary:
    """Push every draw through S -> field and summarize pointwise.

    Reports both the mean of push-forwards and the push-forward of the
    parameter mean; the two differ for nonlinear maps.
    """
    S = chain.samples
    if S.shape[0] == 0:
        raise ValueError("empty chain")
    n_draws = S.shape[0]
    first = np.asarray(push_forward(S[0]), dtype=np.float64)
    fields = np.empty((n_draws, first.size))
    fields[0] = first
    for i in range(1, n_draws):
        fields[i] = push_forward(S[i])
    mean_f = fields.mean(axis=0)
    var_f = fields.var(axis=0)
    lo = np.empty(first.size)
    hi = np.empty(first.size)
    if n_draws >= 2:
        for j in range(first.size):
            lo[j], hi[j] = hpd_interval(fields[:, j], mass)
    else:
        lo[:] = mean_f
        hi[:] = mean_f
    pf_mean = np.asarray(push_forward(S.mean(axis=0)), dtype=np.float64)
    map_field = None if map_point is None else \
        np.asarray(push_forward(np.asarray(map_point)), dtype=np.float64)
    return PosteriorSummary(mean_f, var_f, lo, hi, pf_mean, map_field)
