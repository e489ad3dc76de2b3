"""Causal zero-delay decision rules.

Soft BA-MAP scores the full belief-weighted Gaussian mixture; BA-MAP
collapses it to a moment-matched Gaussian pair and thresholds; the fixed
threshold and the two genie-aided baselines (state-aware MMSE, power
adjustment) serve as references.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from .channel import ChannelConfig, StateTable, TapSet, VARIANCE_FLOOR
from .belief import (Belief, ForwardBelief, gaussian_log_density,
                     log_sum_exp)
from . import simulate


class DegenerateMomentsError(ValueError):
    """Raised when the bit-1 mixture mean does not exceed the bit-0 mean."""


@dataclass
class DetectorOutput:
    decision: int
    statistic: float  # LLR (soft), threshold tau_t (BA-MAP/fixed), or z_t
    aux: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MixtureMoments:
    mu0: float
    mu1: float
    var0: float
    var1: float


def soft_bamap_llr(b: Belief, y: float, table: StateTable, p1: float) -> float:
    """Mixture MAP log-likelihood ratio (natural log).

    Exactly 2 * 2^m Gaussian log-density evaluations per call.
    """
    logf = gaussian_log_density(y, table.mean, table.var_floored)
    weighted = b.log_weights[None, :] + logf
    return float(np.log(p1) + log_sum_exp(weighted[1])
                 - np.log(1.0 - p1) - log_sum_exp(weighted[0]))


def bamap_moments(b: Belief, table: StateTable) -> MixtureMoments:
    """First and second moments of the belief-weighted mixtures, both inputs."""
    alpha = b.probabilities()
    mu = table.mean @ alpha
    second = (table.variance + table.mean ** 2) @ alpha
    var = second - mu ** 2
    return MixtureMoments(mu0=float(mu[0]), mu1=float(mu[1]),
                          var0=float(var[0]), var1=float(var[1]))


# Relative variance difference below which the equal-variance closed form
# is used instead of the quadratic.
EQUAL_VAR_RTOL = 1e-9


def bamap_threshold(mm: MixtureMoments, p1: float) -> float:
    """Threshold solving p0 N(tau; mu0, var0) = p1 N(tau; mu1, var1).

    Equal variances: closed form.  Otherwise the quadratic from equating
    log densities; of its real roots the one closest to the midpoint of
    the means is taken, and a complex pair falls back to the midpoint.
    """
    if mm.mu1 <= mm.mu0:
        raise DegenerateMomentsError(
            f"mixture means not separated: mu0={mm.mu0}, mu1={mm.mu1}")
    p0 = 1.0 - p1
    v0 = max(mm.var0, VARIANCE_FLOOR)
    v1 = max(mm.var1, VARIANCE_FLOOR)
    mid = 0.5 * (mm.mu0 + mm.mu1)
    if abs(v0 - v1) <= EQUAL_VAR_RTOL * max(v0, v1):
        v = 0.5 * (v0 + v1)
        return mid + v * np.log(p0 / p1) / (mm.mu1 - mm.mu0)
    a = 0.5 * (1.0 / v1 - 1.0 / v0)
    b = mm.mu0 / v0 - mm.mu1 / v1
    c = (np.log(p0 / p1) + 0.5 * np.log(v1 / v0)
         + mm.mu1 ** 2 / (2.0 * v1) - mm.mu0 ** 2 / (2.0 * v0))
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return mid
    root = np.sqrt(disc)
    candidates = ((-b - root) / (2.0 * a), (-b + root) / (2.0 * a))
    return min(candidates, key=lambda t: abs(t - mid))


def fixed_threshold_decide(y: float, tau: float) -> int:
    """1 iff y strictly exceeds tau (ties decide 0)."""
    return int(y > tau)


class SoftBAMAPDetector:
    """Belief-weighted mixture MAP-LLR detector."""

    name = "soft_bamap"

    def __init__(self, table: StateTable, p1: float, init: str = "cold"):
        self.engine = ForwardBelief(table, p1, init=init)
        self.table = table
        self.p1 = p1
        self._logit_prior = float(np.log(p1) - np.log(1.0 - p1))

    def step(self, y: float) -> DetectorOutput:
        # one shared density evaluation feeds both the LLR and the update:
        # exactly 2 * 2^m Gaussian log-densities per symbol
        lse0, lse1 = self.engine.step_with_scores(y)
        llr = self._logit_prior + lse1 - lse0
        return DetectorOutput(decision=int(llr > 0.0), statistic=llr)


class BAMAPDetector:
    """Belief-adaptive MAP threshold on moment-matched Gaussian surrogates."""

    name = "bamap"

    def __init__(self, table: StateTable, p1: float, init: str = "cold"):
        self.engine = ForwardBelief(table, p1, init=init)
        self.table = table
        self.p1 = p1

    def step(self, y: float) -> DetectorOutput:
        mm = bamap_moments(Belief(self.engine.log_alpha), self.table)
        tau = bamap_threshold(mm, self.p1)
        self.engine.step_with_scores(y)
        return DetectorOutput(decision=fixed_threshold_decide(y, tau),
                              statistic=tau,
                              aux={"moments": mm})


class FixedThresholdDetector:
    name = "fixed"

    def __init__(self, tau: float):
        self.tau = tau

    def step(self, y: float) -> DetectorOutput:
        return DetectorOutput(decision=fixed_threshold_decide(y, self.tau),
                              statistic=self.tau)


def run_detector(detector, counts: np.ndarray) -> np.ndarray:
    """Feed a count series through a sequential detector."""
    return np.fromiter((detector.step(float(y)).decision for y in counts),
                       dtype=np.int64, count=len(counts))


# ---------------------------------------------------------------------------
# Genie-aided MMSE baseline
# ---------------------------------------------------------------------------

def design_mmse_filter(taps: TapSet, cfg: ChannelConfig,
                       length: int | None = None) -> tuple[np.ndarray, float]:
    """Causal length-L linear MMSE filter for estimating X_t from y_t..y_{t-L+1}.

    Second-order statistics are analytic: Bernoulli(p1) i.i.d. inputs and
    state-averaged counting noise.  Returns (w, mean_y) where w[i] weighs
    the mean-removed observation y_{t-i}.
    """
    m = taps.memory_order
    L = m + 1 if length is None else length
    p1 = cfg.prior_p1
    ntx = cfg.molecules_per_on
    h = taps.taps
    var_x = p1 * (1.0 - p1)
    noise_var = ntx * p1 * float(taps.var_factors.sum())
    R = np.zeros((L, L))
    for i in range(L):
        for j in range(L):
            lag = abs(i - j)
            acc = float(np.dot(h[: m + 1 - lag], h[lag:])) if lag <= m else 0.0
            R[i, j] = ntx ** 2 * var_x * acc
        R[i, i] += noise_var
    p = np.zeros(L)
    p[0] = ntx * h[0] * var_x
    w = np.linalg.solve(R, p)
    mean_y = ntx * p1 * float(h.sum())
    return w, mean_y


class GenieMMSEDetector:
    """MMSE front end with per-true-state MAP thresholds on its output.

    The filter is analytic; the conditional moments of the equalizer
    output z given (input, state) are calibrated by Monte Carlo, after
    which decisions use the true ISI state revealed by the genie.
    """

    name = "genie_mmse"

    def __init__(self, taps: TapSet, cfg: ChannelConfig,
                 length: int | None = None):
        self.taps = taps
        self.cfg = cfg
        self.w, self.mean_y = design_mmse_filter(taps, cfg, length)
        self.thresholds: np.ndarray | None = None

    def equalize(self, counts: np.ndarray) -> np.ndarray:
        z = np.convolve(counts - self.mean_y, self.w)
        return z[: len(counts)]

    def calibrate(self, table: StateTable, seed, n_cal: int = 100_000,
                  min_per_class: int = 25) -> None:
        rec = simulate.run_trace(self.cfg, table, n_cal, seed)
        z = self.equalize(rec.counts)
        S = table.num_states
        p1 = self.cfg.prior_p1
        mu = np.zeros((2, S))
        var = np.ones((2, S))
        seen = np.zeros((2, S), dtype=bool)
        for x in (0, 1):
            for s in range(S):
                sel = z[(rec.bits == x) & (rec.states == s)]
                if len(sel) >= min_per_class:
                    mu[x, s] = sel.mean()
                    var[x, s] = max(sel.var(), VARIANCE_FLOOR)
                    seen[x, s] = True
        # pooled fallback for states visited too rarely to calibrate
        pooled = MixtureMoments(
            mu0=float(z[rec.bits == 0].mean()), mu1=float(z[rec.bits == 1].mean()),
            var0=max(float(z[rec.bits == 0].var()), VARIANCE_FLOOR),
            var1=max(float(z[rec.bits == 1].var()), VARIANCE_FLOOR))
        pooled_tau = bamap_threshold(pooled, p1)
        thresholds = np.full(S, pooled_tau)
        for s in range(S):
            if seen[0, s] and seen[1, s] and mu[1, s] > mu[0, s]:
                mm = MixtureMoments(mu0=mu[0, s], mu1=mu[1, s],
                                    var0=var[0, s], var1=var[1, s])
                thresholds[s] = bamap_threshold(mm, p1)
        self.thresholds = thresholds

    def detect(self, counts: np.ndarray, states: np.ndarray) -> np.ndarray:
        if self.thresholds is None:
            raise RuntimeError("GenieMMSEDetector used before calibration")
        z = self.equalize(counts)
        return (z > self.thresholds[states]).astype(np.int64)


# ---------------------------------------------------------------------------
# Genie-aided power-adjustment baseline
# ---------------------------------------------------------------------------

def pa_emissions(bits: np.ndarray, taps: TapSet, cfg: ChannelConfig) -> np.ndarray:
    """Per-symbol emitted molecule counts under residual-ISI cancellation.

    On a 1-bit the transmitter removes the interference it knows it has
    already injected: N_t = clamp(N_tx - residual_t / h_0, 0, N_tx).
    """
    n = len(bits)
    m = taps.memory_order
    h = taps.taps
    ntx = cfg.molecules_per_on
    emitted = np.zeros(n)
    for t in range(n):
        if bits[t]:
            residual = 0.0
            for k in range(1, min(m, t) + 1):
                residual += h[k] * emitted[t - k]
            emitted[t] = min(max(ntx - residual / h[0], 0.0), ntx)
    return emitted


def run_pa_trace(cfg: ChannelConfig, taps: TapSet, n: int,
                 seed) -> simulate.RunRecord:
    """Gaussian-mode trace of the power-adjusting transmitter."""
    bits = simulate.generate_bits(n, cfg.prior_p1, seed, 0)
    emitted = pa_emissions(bits, taps, cfg)
    mu = np.convolve(emitted, taps.taps)[:n]
    var = np.maximum(np.convolve(emitted, taps.var_factors)[:n],
                     VARIANCE_FLOOR)
    rng = simulate.make_rng(seed, 1)
    counts = rng.normal(mu, np.sqrt(var))
    states = simulate.evolve_states(bits, taps.memory_order)
    return simulate.RunRecord(bits=bits, states=states, counts=counts,
                              seed=int(seed), mode="pa_gaussian")
