"""Finite-state heteroscedastic channel construction for diffusive MC links.

Builds the tap vector (per-molecule arrival fractions), the variance
factors for the chosen counting model, and the per-(input, state)
mean/variance tables that every detector and the rate estimator consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import erfc

# Floor applied to every variance before a Gaussian density or draw; keeps
# the all-zero ISI state (mu = sigma^2 = 0) from producing a singular density.
VARIANCE_FLOOR = 1e-6


class CountingModel(str, Enum):
    POISSON = "poisson"
    BINOMIAL = "binomial"


@dataclass(frozen=True)
class ChannelConfig:
    """Physical link parameters. Units: micrometers, um^2/s, seconds."""

    tx_distance_um: float
    rx_radius_um: float
    diffusion_um2_s: float
    ts_seconds: float
    molecules_per_on: int
    prior_p1: float = 0.5
    counting_model: CountingModel = CountingModel.BINOMIAL

    def __post_init__(self) -> None:
        if not self.tx_distance_um > self.rx_radius_um > 0:
            raise ValueError("require tx_distance_um > rx_radius_um > 0")
        if self.diffusion_um2_s <= 0:
            raise ValueError("diffusion_um2_s must be positive")
        if self.ts_seconds <= 0:
            raise ValueError("ts_seconds must be positive")
        if self.molecules_per_on < 1:
            raise ValueError("molecules_per_on must be >= 1")
        if not 0.0 < self.prior_p1 < 1.0:
            raise ValueError("prior_p1 must lie strictly in (0, 1)")

    @property
    def prior_p0(self) -> float:
        return 1.0 - self.prior_p1

    @property
    def capture_fraction(self) -> float:
        """Asymptotic probability that an emitted molecule is ever absorbed."""
        return self.rx_radius_um / self.tx_distance_um


def hit_probability(t, cfg: ChannelConfig):
    """Cumulative absorption probability of one molecule by time t.

    3-D point source with a fully absorbing spherical receiver:
    (r_r/d) * erfc((d - r_r) / sqrt(4 D t)).  Accepts scalars or arrays.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise ValueError("t must be nonnegative")
    out = np.zeros_like(t_arr)
    pos = t_arr > 0
    gap = cfg.tx_distance_um - cfg.rx_radius_um
    out[pos] = cfg.capture_fraction * erfc(
        gap / np.sqrt(4.0 * cfg.diffusion_um2_s * t_arr[pos])
    )
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class TapSet:
    """Arrival fractions h_0..h_m and matching per-molecule variance factors."""

    taps: np.ndarray
    var_factors: np.ndarray
    memory_order: int
    counting_model: CountingModel

    def __post_init__(self) -> None:
        self.taps.setflags(write=False)
        self.var_factors.setflags(write=False)
        if len(self.taps) != self.memory_order + 1:
            raise ValueError("taps length must equal memory_order + 1")


def compute_taps(cfg: ChannelConfig, m: int) -> TapSet:
    """Tap h_k = F_hit((k+1) T_s) - F_hit(k T_s), k = 0..m."""
    if m < 0:
        raise ValueError("memory order must be >= 0")
    edges = hit_probability(np.arange(m + 2) * cfg.ts_seconds, cfg)
    taps = np.diff(edges)
    if not np.any(taps > 0):
        raise ValueError("degenerate channel: all taps are zero")
    if cfg.counting_model is CountingModel.POISSON:
        var_factors = taps.copy()
    else:
        var_factors = taps * (1.0 - taps)
    return TapSet(taps=taps, var_factors=var_factors, memory_order=m,
                  counting_model=cfg.counting_model)


def select_memory_order(cfg: ChannelConfig, coverage: float = 0.70,
                        m_max: int = 15) -> tuple[int, bool]:
    """Smallest m whose cumulative taps capture `coverage` of all arrivals.

    The denominator is the asymptotic capture fraction r_r/d.  Returns
    (m, capped); capped is True when m_max binds.
    """
    if not 0.0 < coverage < 1.0:
        raise ValueError("coverage must lie in (0, 1)")
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    target = coverage * cfg.capture_fraction
    # Telescoping: sum_{k<=m} h_k = F_hit((m+1) T_s).
    for m in range(m_max + 1):
        if hit_probability((m + 1) * cfg.ts_seconds, cfg) >= target:
            return m, False
    return m_max, True


@dataclass(frozen=True)
class StateTable:
    """Per-(input, state) Gaussian moments and the deterministic transitions.

    State s encodes the m most recent past bits; bit (k-1) of s holds
    X_{t-k}.  mean/variance have shape (2, 2^m) indexed [x, s];
    next_state has shape (2^m, 2) indexed [s, x].
    """

    memory_order: int
    molecules_per_on: int
    mean: np.ndarray
    variance: np.ndarray
    next_state: np.ndarray
    var_floored: np.ndarray = field(init=False)
    log_var_floored: np.ndarray = field(init=False)
    inv_var_floored: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        floored = np.maximum(self.variance, VARIANCE_FLOOR)
        object.__setattr__(self, "var_floored", floored)
        object.__setattr__(self, "log_var_floored", np.log(floored))
        object.__setattr__(self, "inv_var_floored", 1.0 / floored)
        for arr in (self.mean, self.variance, self.next_state,
                    self.var_floored, self.log_var_floored,
                    self.inv_var_floored):
            arr.setflags(write=False)

    @property
    def num_states(self) -> int:
        return 1 << self.memory_order


def state_bits(s: int, m: int) -> np.ndarray:
    """History bits (X_{t-1}, ..., X_{t-m}) encoded by state s."""
    return np.array([(s >> k) & 1 for k in range(m)], dtype=np.int64)


def build_state_table(taps: TapSet, cfg: ChannelConfig) -> StateTable:
    m = taps.memory_order
    num_states = 1 << m
    ntx = cfg.molecules_per_on
    states = np.arange(num_states)
    # bits[s, k] = X_{t-(k+1)} for state s
    bits = (states[:, None] >> np.arange(m)[None, :]) & 1

    isi_mean = ntx * bits @ taps.taps[1:]
    isi_var = ntx * bits @ taps.var_factors[1:]
    mean = np.stack([isi_mean, isi_mean + ntx * taps.taps[0]])
    variance = np.stack([isi_var, isi_var + ntx * taps.var_factors[0]])

    mask = num_states - 1
    next_state = np.empty((num_states, 2), dtype=np.int64)
    for x in (0, 1):
        next_state[:, x] = ((states << 1) | x) & mask
    return StateTable(memory_order=m, molecules_per_on=ntx, mean=mean,
                      variance=variance, next_state=next_state)


def build_channel(cfg: ChannelConfig, coverage: float = 0.70,
                  m_max: int = 15) -> tuple[TapSet, StateTable, int, bool]:
    """Convenience: select m, compute taps, and build the state table."""
    m, capped = select_memory_order(cfg, coverage=coverage, m_max=m_max)
    taps = compute_taps(cfg, m)
    return taps, build_state_table(taps, cfg), m, capped
