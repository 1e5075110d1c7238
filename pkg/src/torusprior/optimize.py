"""Limited-memory BFGS maximizer for whitened log-posteriors.

Two-loop recursion over a small history of curvature pairs with a strong
Wolfe line search (sufficient decrease + curvature condition), minimizing
the negative log-posterior.  Accepted iterates never increase the
objective; a line-search failure terminates cleanly with the last iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizerConfig:
    memory: int = 10
    max_iter: int = 500
    grad_tol: float = 1e-8
    c1: float = 1e-4          # sufficient decrease
    c2: float = 0.9           # curvature
    max_ls_steps: int = 30

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.grad_tol <= 0 or self.c1 <= 0 or self.c2 <= self.c1 or self.c2 >= 1:
            raise ValueError("invalid line-search constants")


@dataclass
class LbfgsResult:
    x: np.ndarray
    value: float              # log-posterior at x
    grad_norm: float
    n_iter: int
    status: str               # "converged" | "max_iter" | "line_search_failure"
    trace: list = field(default_factory=list)   # negative log-posterior per accepted step


def _cubic_interp(a_lo, f_lo, g_lo, a_hi, f_hi):
    """Safeguarded minimizer of a cubic fit inside (a_lo, a_hi)."""
    span = a_hi - a_lo
    denom = f_hi - f_lo - g_lo * span
    if abs(denom) < 1e-18:
        return a_lo + 0.5 * span
    cand = a_lo - 0.5 * g_lo * span ** 2 / denom
    lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
    pad = 0.1 * abs(span)
    return float(np.clip(cand, lo + pad, hi - pad))


def _wolfe_search(fg, x, f0, g0, d, cfg: OptimizerConfig):
    """Strong Wolfe search along d; returns (alpha, f, g) or None on failure."""
    d0 = float(d @ g0)
    if d0 >= 0:
        return None

    def suff(a, f_a):
        return f_a <= f0 + cfg.c1 * a * d0

    def zoom(a_lo, f_lo, g_lo_dir, a_hi, f_hi):
        best = None
        for _ in range(cfg.max_ls_steps):
            if abs(a_hi - a_lo) <= 1e-14 * max(1.0, abs(a_lo)):
                break
            a = _cubic_interp(a_lo, f_lo, g_lo_dir, a_hi, f_hi)
            f_a, g_a = fg(x + a * d)
            g_a_dir = float(d @ g_a)
            if not suff(a, f_a) or f_a >= f_lo:
                a_hi, f_hi = a, f_a
            else:
                best = (a, f_a, g_a)
                if abs(g_a_dir) <= -cfg.c2 * d0:
                    return best
                if g_a_dir * (a_hi - a_lo) >= 0:
                    a_hi, f_hi = a_lo, f_lo
                a_lo, f_lo, g_lo_dir = a, f_a, g_a_dir
        # fall back to the best sufficient-decrease point seen (weak Wolfe)
        if best is not None:
            return best
        if suff(a_lo, f_lo) and a_lo > 0:
            f_a, g_a = fg(x + a_lo * d)
            return a_lo, f_a, g_a
        return None

    alpha_prev, f_prev, g_prev_dir = 0.0, f0, d0
    alpha = 1.0
    for it in range(cfg.max_ls_steps):
        f_a, g_a = fg(x + alpha * d)
        g_a_dir = float(d @ g_a)
        if not suff(alpha, f_a) or (it > 0 and f_a >= f_prev):
            return zoom(alpha_prev, f_prev, g_prev_dir, alpha, f_a)
        if abs(g_a_dir) <= -cfg.c2 * d0:
            return alpha, f_a, g_a
        if g_a_dir >= 0:
            return zoom(alpha, f_a, g_a_dir, alpha_prev, f_prev)
        alpha_prev, f_prev, g_prev_dir = alpha, f_a, g_a_dir
        alpha *= 2.0
    return None


def map_lbfgs(post, config: OptimizerConfig | None = None,
              init: np.ndarray | None = None) -> LbfgsResult:
    """Maximize post.log_posterior starting from `init` (default: the prior mode 0)."""
    cfg = config or OptimizerConfig()
    n = post.n_params
    x = np.zeros(n) if init is None else np.asarray(init, dtype=np.float64).copy()

    def fg(z):
        return -post.log_posterior(z), -post.gradient(z)

    f, g = fg(x)
    trace = [f]
    s_hist, y_hist, rho_hist = [], [], []
    status = "max_iter"
    n_iter = 0
    for n_iter in range(1, cfg.max_iter + 1):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= cfg.grad_tol:
            status = "converged"
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        if y_hist:
            y_last, s_last = y_hist[-1], s_hist[-1]
            q *= float(s_last @ y_last) / float(y_last @ y_last)
        for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        d = -q
        hit = _wolfe_search(fg, x, f, g, d, cfg)
        if hit is None:
            # retry once along steepest descent before giving up
            d = -g
            hit = _wolfe_search(fg, x, f, g, d, cfg)
            if hit is None:
                status = "line_search_failure"
                break
        alpha, f_new, g_new = hit
        s_vec = alpha * d
        y_vec = g_new - g
        sy = float(s_vec @ y_vec)
        if sy > 1e-12 * float(np.linalg.norm(s_vec)) * float(np.linalg.norm(y_vec)):
            s_hist.append(s_vec)
            y_hist.append(y_vec)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > cfg.memory:
                s_hist.pop(0), y_hist.pop(0), rho_hist.pop(0)
        x = x + s_vec
        f, g = f_new, g_new
        trace.append(f)
    else:
        n_iter = cfg.max_iter
    gnorm = float(np.linalg.norm(g))
    if status == "max_iter" and gnorm <= cfg.grad_tol:
        status = "converged"
    return LbfgsResult(x, -f, gnorm, n_iter, status, trace)
