"""Reproducible sequence simulation for the finite-state count channel.

All randomness flows through numpy's counter-based Philox generator so a
(config, n, seed, mode) tuple pins a trace bit-for-bit; parallel sweeps
derive disjoint streams from SeedSequence spawn keys.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ChannelConfig, StateTable, TapSet

RNG_ALGORITHM = "numpy.random.Philox"

GAUSSIAN = "gaussian"
BINOMIAL = "binomial"


def make_rng(seed, *stream_key: int) -> np.random.Generator:
    """Philox generator for an independent (seed, purpose...) stream."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream_key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class RunRecord:
    """Per-symbol trace of one simulated transmission."""

    bits: np.ndarray
    states: np.ndarray
    counts: np.ndarray
    seed: int
    mode: str

    @property
    def n(self) -> int:
        return len(self.bits)

    def to_csv(self, path: Path | str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "bit", "state", "count"])
            for t in range(self.n):
                writer.writerow([t, int(self.bits[t]), int(self.states[t]),
                                 repr(float(self.counts[t]))])


def generate_bits(n: int, p1: float, seed, *stream_key: int) -> np.ndarray:
    """i.i.d. Bernoulli(p1) symbol sequence."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed, *stream_key)
    return (rng.random(n) < p1).astype(np.int64)


def evolve_states(bits: np.ndarray, m: int, s0: int = 0) -> np.ndarray:
    """Shift-register state sequence; states[t] encodes bits[t-m .. t-1]."""
    n = len(bits)
    states = np.zeros(n, dtype=np.int64)
    if m == 0:
        return states
    for k in range(1, m + 1):
        states[k:] += bits[: n - k] << (k - 1)
    # the first m symbols also see the pre-start history encoded by s0
    for t in range(min(m, n)):
        hist = 0
        for k in range(1, m + 1):
            bit = int(bits[t - k]) if t - k >= 0 else (s0 >> (k - 1 - t)) & 1
            hist |= bit << (k - 1)
        states[t] = hist
    return states


def sample_count_gaussian(x: int, s: int, table: StateTable,
                          rng: np.random.Generator) -> float:
    """Single Gaussian draw with the table's (x, s) moments (not truncated)."""
    return float(rng.normal(table.mean[x, s],
                            np.sqrt(table.var_floored[x, s])))


def sample_count_binomial(history_bits, taps: TapSet, cfg: ChannelConfig,
                          rng: np.random.Generator) -> int:
    """Exact count: independent Binomial arrivals per contributing emission.

    history_bits = (x_t, x_{t-1}, ..., x_{t-m}).
    """
    total = 0
    for k, bit in enumerate(history_bits):
        if bit:
            total += rng.binomial(cfg.molecules_per_on, taps.taps[k])
    return int(total)


def run_trace(cfg: ChannelConfig, table: StateTable, n: int, seed,
              mode: str = GAUSSIAN, taps: TapSet | None = None,
              bits: np.ndarray | None = None) -> RunRecord:
    """Full deterministic trace: bits, state evolution, received counts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if bits is None:
        bits = generate_bits(n, cfg.prior_p1, seed, 0)
    states = evolve_states(bits, table.memory_order)
    if mode == GAUSSIAN:
        rng = make_rng(seed, 1)
        mu = table.mean[bits, states]
        sigma = np.sqrt(table.var_floored[bits, states])
        counts = rng.normal(mu, sigma)
    elif mode == BINOMIAL:
        if taps is None:
            raise ValueError("binomial mode needs the TapSet")
        rng = make_rng(seed, 1)
        m = table.memory_order
        counts = np.zeros(n, dtype=np.float64)
        for k in range(m + 1):
            active = np.zeros(n, dtype=bool)
            active[k:] = bits[: n - k] == 1
            draws = rng.binomial(cfg.molecules_per_on, taps.taps[k],
                                 size=int(active.sum()))
            counts[active] += draws
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return RunRecord(bits=bits, states=states, counts=counts,
                     seed=int(seed), mode=mode)
