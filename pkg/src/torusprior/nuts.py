"""No-U-turn sampler: multinomial trajectory sampling with dual averaging.

Leapfrog integration under an identity mass matrix (whitened coordinates
are approximately unit-scale by construction of the priors), binary tree
doubling terminated by the U-turn criterion, multinomial sampling of the
proposal within each trajectory with biased progressive weighting across
doublings, and dual-averaging step-size adaptation during warmup targeting
a given acceptance statistic.  Trajectories with an energy error above the
divergence threshold stop expanding and are counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import ess_flagged
from .whitenoise import RngSeed

DIVERGENCE_THRESHOLD = 1000.0
TARGET_ACCEPT = 0.8
MAX_TREE_DEPTH = 10


@dataclass
class PosteriorChain:
    """Post-warmup draws in whitened coordinates plus sampler diagnostics."""

    samples: np.ndarray            # (draws, n_params)
    warmup: int
    draws: int
    step_size: float
    divergences: int
    mean_accept: float
    ess: np.ndarray = field(default=None)
    ess_flags: np.ndarray = field(default=None)
    seed: RngSeed | None = None

    def __post_init__(self):
        if self.samples.shape[0] != self.draws:
            raise ValueError("sample count does not match configuration")
        if self.ess is None:
            ess_vals = np.empty(self.samples.shape[1])
            flags = np.zeros(self.samples.shape[1], dtype=bool)
            for j in range(self.samples.shape[1]):
                e, flag = ess_flagged(self.samples[:, j])
                ess_vals[j] = min(e, float(self.draws)) if e > 0 else 0.0
                flags[j] = flag
            self.ess = ess_vals
            self.ess_flags = flags


class _Tree:
    """State carried by one subtree during doubling."""

    __slots__ = ("theta_m", "r_m", "g_m", "theta_p", "r_p", "g_p",
                 "theta_prop", "logp_prop", "g_prop", "log_w", "ok",
                 "sum_accept", "n_steps")


def _leapfrog(theta, r, grad, eps, vg_fn):
    """One leapfrog step; returns (theta', r', logp', grad')."""
    r_half = r + 0.5 * eps * grad
    theta_new = theta + eps * r_half
    logp_new, grad_new = vg_fn(theta_new)
    r_new = r_half + 0.5 * eps * grad_new
    return theta_new, r_new, logp_new, grad_new


def _logsumexp2(a, b):
    m = max(a, b)
    if m == -np.inf:
        return -np.inf
    return m + np.log(np.exp(a - m) + np.exp(b - m))


def nuts_sample(post, warmup: int, draws: int, seed: RngSeed,
                target_accept: float = TARGET_ACCEPT,
                max_depth: int = MAX_TREE_DEPTH,
                divergence_threshold: float = DIVERGENCE_THRESHOLD,
                init: np.ndarray | None = None,
                progress: bool = False) -> PosteriorChain:
    """Run NUTS on a posterior exposing log_posterior/gradient.

    Aborts only when the log-density at the initial point is non-finite;
    divergences later on are counted and reported in the chain.
    """
    if warmup < 1:
        raise ValueError("warmup must be >= 1")
    rng = seed.generator()
    n = post.n_params
    theta = np.zeros(n) if init is None else np.asarray(init, dtype=np.float64).copy()

    raw_vg = getattr(post, "value_and_grad", None)
    if raw_vg is None:
        def raw_vg(th):
            return post.log_posterior(th), post.gradient(th)

    zero_grad = np.zeros(n)

    def vg_fn(th):
        """(logp, grad) with -inf on any numerical failure."""
        if not np.all(np.isfinite(th)):
            return -np.inf, zero_grad
        try:
            v, g = raw_vg(th)
        except FloatingPointError:
            return -np.inf, zero_grad
        if not np.isfinite(v) or not np.all(np.isfinite(g)):
            return -np.inf, zero_grad
        return v, g

    logp = post.log_posterior(theta)
    if not np.isfinite(logp):
        raise FloatingPointError("log-posterior non-finite at the initial point")
    grad = post.gradient(theta)

    def joint(logp_val, r):
        return logp_val - 0.5 * float(r @ r)

    # reasonable initial step size: scale until the leapfrog acceptance
    # crosses 1/2 (classic heuristic)
    eps = 1.0
    r0 = rng.standard_normal(n)
    h0 = joint(logp, r0)
    _, r1, lp1, _ = _leapfrog(theta, r0, grad, eps, vg_fn)
    ratio = joint(lp1, r1) - h0 if np.isfinite(lp1) else -np.inf
    direction = 1.0 if ratio > np.log(0.5) else -1.0
    for _ in range(50):
        eps *= 2.0 ** direction
        _, r1, lp1, _ = _leapfrog(theta, r0, grad, eps, vg_fn)
        ratio = joint(lp1, r1) - h0 if np.isfinite(lp1) else -np.inf
        if direction * ratio <= direction * np.log(0.5):
            break

    # dual averaging state
    mu = np.log(10.0 * eps)
    log_eps_bar, h_bar = 0.0, 0.0
    gamma, t0, kappa = 0.05, 10.0, 0.75

    samples = np.empty((draws, n))
    divergences = 0
    accept_sum, accept_count = 0.0, 0

    total = warmup + draws
    for m in range(1, total + 1):
        r0 = rng.standard_normal(n)
        h0 = joint(logp, r0)

        tree = _Tree()
        tree.theta_m, tree.r_m, tree.g_m = theta, r0, grad
        tree.theta_p, tree.r_p, tree.g_p = theta, r0, grad
        tree.theta_prop, tree.logp_prop, tree.g_prop = theta, logp, grad
        tree.log_w = 0.0
        diverged = False
        sum_acc, n_acc = 0.0, 0

        def build(theta0, r, g, direction, depth):
            nonlocal diverged, sum_acc, n_acc
            if depth == 0:
                th, rr, lp, gg = _leapfrog(theta0, r, g, direction * eps, vg_fn)
                h = joint(lp, rr) if np.isfinite(lp) else -np.inf
                sub = _Tree()
                sub.theta_m = sub.theta_p = sub.theta_prop = th
                sub.r_m = sub.r_p = rr
                sub.g_m = sub.g_p = sub.g_prop = gg
                sub.logp_prop = lp
                sub.log_w = h - h0
                err = h - h0
                sub.ok = err > -divergence_threshold
                if not sub.ok:
                    diverged = True
                sum_acc += min(1.0, np.exp(min(0.0, err)))
                n_acc += 1
                return sub
            first = build(theta0, r, g, direction, depth - 1)
            if not first.ok:
                return first
            if direction == -1:
                second = build(first.theta_m, first.r_m, first.g_m, direction, depth - 1)
                first.theta_m, first.r_m, first.g_m = second.theta_m, second.r_m, second.g_m
            else:
                second = build(first.theta_p, first.r_p, first.g_p, direction, depth - 1)
                first.theta_p, first.r_p, first.g_p = second.theta_p, second.r_p, second.g_p
            total_w = _logsumexp2(first.log_w, second.log_w)
            if second.ok and total_w > -np.inf:
                if np.log(rng.uniform()) < second.log_w - total_w:
                    first.theta_prop = second.theta_prop
                    first.logp_prop = second.logp_prop
                    first.g_prop = second.g_prop
            first.log_w = total_w
            dx = first.theta_p - first.theta_m
            u_ok = (float(dx @ first.r_m) >= 0) and (float(dx @ first.r_p) >= 0)
            first.ok = first.ok and second.ok and u_ok
            return first

        for depth in range(max_depth):
            direction = 1 if rng.uniform() < 0.5 else -1
            if direction == -1:
                sub = build(tree.theta_m, tree.r_m, tree.g_m, -1, depth)
            else:
                sub = build(tree.theta_p, tree.r_p, tree.g_p, 1, depth)
            if direction == -1:
                tree.theta_m, tree.r_m, tree.g_m = sub.theta_m, sub.r_m, sub.g_m
            else:
                tree.theta_p, tree.r_p, tree.g_p = sub.theta_p, sub.r_p, sub.g_p
            if sub.ok:
                # biased progressive sampling favors the new subtree
                if np.log(rng.uniform()) < sub.log_w - tree.log_w:
                    tree.theta_prop = sub.theta_prop
                    tree.logp_prop = sub.logp_prop
                    tree.g_prop = sub.g_prop
            tree.log_w = _logsumexp2(tree.log_w, sub.log_w)
            if not sub.ok:
                break
            dx = tree.theta_p - tree.theta_m
            if float(dx @ tree.r_m) < 0 or float(dx @ tree.r_p) < 0:
                break

        if diverged and m > warmup:
            divergences += 1
        theta, logp, grad = tree.theta_prop, tree.logp_prop, tree.g_prop

        accept_stat = sum_acc / max(n_acc, 1)
        if m <= warmup:
            frac = 1.0 / (m + t0)
            h_bar = (1 - frac) * h_bar + frac * (target_accept - accept_stat)
            log_eps = mu - np.sqrt(m) / gamma * h_bar
            eta = m ** -kappa
            log_eps_bar = (1 - eta) * log_eps_bar + eta * log_eps
            eps = float(np.exp(log_eps))
            if m == warmup:
                eps = float(np.exp(log_eps_bar))
        else:
            samples[m - warmup - 1] = theta
            accept_sum += accept_stat
            accept_count += 1
        if progress and m % 200 == 0:
            print(f"  nuts iteration {m}/{total} eps={eps:.3g}", flush=True)

    return PosteriorChain(samples, warmup, draws, eps, divergences,
                          accept_sum / max(accept_count, 1), seed=seed)
