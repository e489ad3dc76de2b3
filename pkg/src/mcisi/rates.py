"""Information-rate estimation.

Covers the Monte Carlo channel-rate estimator built on per-symbol
information densities, plug-in hard-decision rates I(X; Xhat), genie
conditional rates I(X; Xhat | S), and fixed-threshold sweeps.
Rates are in bits; detector LLRs elsewhere stay in natural log.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from .channel import ChannelConfig, StateTable
from .belief import (Belief, ForwardBelief, gaussian_log_density,
                     log_sum_exp)
from . import simulate

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class RateEstimate:
    rate: float          # bits per symbol
    std_error: float     # bits per symbol
    n: int
    ts_seconds: float

    @property
    def throughput(self) -> float:
        """Bits per second."""
        return self.rate / self.ts_seconds


def _batch_std_error(values: np.ndarray, n_batches: int = 100) -> float:
    """Batch-means standard error for serially dependent per-symbol terms."""
    n = len(values)
    if n < n_batches * 2:
        return float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    usable = n - n % n_batches
    means = values[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def info_density_increment(y: float, s: int, x: int, b: Belief,
                           table: StateTable, p1: float) -> float:
    """i_t = log2 f(y | s, x) - log2 p(y | past), in bits."""
    logf = gaussian_log_density(y, table.mean, table.var_floored)
    joint = b.log_weights[None, :] + np.log([1.0 - p1, p1])[:, None] + logf
    return float((logf[x, s] - log_sum_exp(joint)) / LN2)


def information_density_series(counts: np.ndarray, bits: np.ndarray,
                               states: np.ndarray, table: StateTable,
                               p1: float) -> np.ndarray:
    """Per-symbol information densities along a simulated trace (bits)."""
    n = len(counts)
    if table.num_states == 1:
        # memoryless: predictive is the prior mixture, no recursion needed
        logf = gaussian_log_density(counts[:, None], table.mean[:, 0],
                                    table.var_floored[:, 0])
        joint = logf + np.log([1.0 - p1, p1])
        hi = joint.max(axis=1)
        pred = hi + np.log(np.exp(joint - hi[:, None]).sum(axis=1))
        cond = logf[np.arange(n), bits]
        return (cond - pred) / LN2
    engine = ForwardBelief(table, p1)
    out = np.empty(n)
    lp0, lp1 = engine.log_prior
    mean, var, lvar = table.mean, table.var_floored, table.log_var_floored
    log_2pi = float(np.log(2.0 * np.pi))
    for t in range(n):
        x, s, y = bits[t], states[t], counts[t]
        d = y - mean[x, s]
        log_cond = -0.5 * (log_2pi + lvar[x, s] + d * d / var[x, s])
        lse0, lse1 = engine.step_with_scores(y)
        pred = np.logaddexp(lp0 + lse0, lp1 + lse1)
        out[t] = (log_cond - pred) / LN2
    return out


def estimate_channel_rate(cfg: ChannelConfig, table: StateTable, n: int,
                          seed, mode: str = simulate.GAUSSIAN,
                          taps=None) -> RateEstimate:
    """Monte Carlo estimate of the model's information rate."""
    if n < 1_000:
        raise ValueError("rate estimation needs n >= 1000")
    rec = simulate.run_trace(cfg, table, n, seed, mode=mode, taps=taps)
    inc = information_density_series(rec.counts, rec.bits, rec.states,
                                    table, cfg.prior_p1)
    return RateEstimate(rate=float(inc.mean()),
                        std_error=_batch_std_error(inc),
                        n=n, ts_seconds=cfg.ts_seconds)


def plug_in_mi(joint: np.ndarray) -> float:
    """Plug-in mutual information (bits) of a 2x2 joint count table."""
    total = joint.sum()
    if total == 0:
        return 0.0
    p = joint / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = p * np.log2(p / (px * py))
    return float(np.nansum(terms))


def _joint_table(bits: np.ndarray, decisions: np.ndarray) -> np.ndarray:
    joint = np.zeros((2, 2))
    for x in (0, 1):
        for xh in (0, 1):
            joint[x, xh] = np.count_nonzero((bits == x) & (decisions == xh))
    return joint


def estimate_hard_decision_rate(bits: np.ndarray, decisions: np.ndarray,
                                ts_seconds: float,
                                n_batches: int = 100) -> RateEstimate:
    """I(X; Xhat) from the empirical joint of (bit, decision)."""
    n = len(bits)
    rate = plug_in_mi(_joint_table(bits, decisions))
    usable = n - n % n_batches
    if usable >= 2 * n_batches:
        b = np.array([plug_in_mi(_joint_table(xs, ds)) for xs, ds in
                      zip(bits[:usable].reshape(n_batches, -1),
                          decisions[:usable].reshape(n_batches, -1))])
        se = float(b.std(ddof=1) / np.sqrt(n_batches))
    else:
        se = 0.0
    return RateEstimate(rate=rate, std_error=se, n=n, ts_seconds=ts_seconds)


def _merge_sparse_states(states: np.ndarray, num_states: int,
                         min_visits: int) -> np.ndarray:
    """Map rarely visited states onto their Hamming-nearest visited state."""
    counts = np.bincount(states, minlength=num_states)
    keep = np.flatnonzero(counts >= min_visits)
    if len(keep) == 0:
        keep = np.array([int(counts.argmax())])
    mapping = np.arange(num_states)
    for s in range(num_states):
        if counts[s] < min_visits:
            dists = [bin(s ^ k).count("1") for k in keep]
            mapping[s] = keep[int(np.argmin(dists))]
    return mapping


def estimate_genie_conditional_rate(bits: np.ndarray, decisions: np.ndarray,
                                    states: np.ndarray, num_states: int,
                                    ts_seconds: float,
                                    min_visits: int = 100,
                                    n_batches: int = 100) -> RateEstimate:
    """I(X; Xhat | S) from per-state empirical joints."""
    mapping = _merge_sparse_states(states, num_states, min_visits)
    grouped = mapping[states]

    def conditional(bits_w, dec_w, grp_w):
        total = len(bits_w)
        acc = 0.0
        for s in np.unique(grp_w):
            sel = grp_w == s
            acc += sel.sum() / total * plug_in_mi(
                _joint_table(bits_w[sel], dec_w[sel]))
        return acc

    rate = conditional(bits, decisions, grouped)
    n = len(bits)
    usable = n - n % n_batches
    if usable >= 2 * n_batches:
        b = np.array([conditional(xs, ds, gs) for xs, ds, gs in
                      zip(bits[:usable].reshape(n_batches, -1),
                          decisions[:usable].reshape(n_batches, -1),
                          grouped[:usable].reshape(n_batches, -1))])
        se = float(b.std(ddof=1) / np.sqrt(n_batches))
    else:
        se = 0.0
    return RateEstimate(rate=rate, std_error=se, n=n, ts_seconds=ts_seconds)


def sweep_fixed_threshold_rate(counts: np.ndarray, bits: np.ndarray,
                               tau_grid: np.ndarray,
                               ts_seconds: float) -> tuple[float, RateEstimate]:
    """Best fixed threshold (by plug-in rate) over a grid."""
    if len(tau_grid) == 0:
        raise ValueError("threshold grid must be nonempty")
    best_tau, best = None, None
    for tau in tau_grid:
        est = estimate_hard_decision_rate(bits, (counts > tau).astype(np.int64),
                                          ts_seconds)
        if best is None or est.rate > best.rate:
            best_tau, best = float(tau), est
    return best_tau, best


def default_tau_grid(table: StateTable, taps, num_points: int = 64) -> np.ndarray:
    upper = table.molecules_per_on * float(np.sum(taps.taps))
    return np.linspace(0.0, upper, num_points)
