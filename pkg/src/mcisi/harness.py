"""Experiment orchestration: config parsing, seed derivation, sweeps, CSVs.

Every grid cell gets its own Philox stream derived from
SeedSequence([base_seed, method_index, ts_index, ntx_index, trial]), so
results are reproducible and independent of execution order.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import (ChannelConfig, CountingModel, build_channel,
                      compute_taps, select_memory_order)
from . import detect, rates, simulate

METHODS = ("fixed", "bamap", "soft_bamap", "genie_mmse", "genie_pa")

DEFAULT_TS_GRID = tuple(np.round(np.geomspace(0.1, 2.0, 8), 4))
DEFAULT_NTX_GRID = (500, 1000, 2000)


@dataclass
class ExperimentSpec:
    channel: ChannelConfig
    methods: tuple[str, ...] = METHODS
    ts_grid: tuple[float, ...] = DEFAULT_TS_GRID
    ntx_grid: tuple[int, ...] = DEFAULT_NTX_GRID
    n_symbols: int = 100_000
    trials: int = 10
    base_seed: int = 2024
    coverage: float = 0.70
    m_max: int = 15
    fixed_tau: float = 90.0
    mode: str = simulate.GAUSSIAN
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.ts_grid or not self.ntx_grid:
            raise ValueError("grids must be nonempty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unregistered methods: {sorted(unknown)}")


class ConfigError(ValueError):
    pass


_CHANNEL_KEYS = {
    "tx_distance_um": float,
    "rx_radius_um": float,
    "diffusion_um2_s": float,
    "ts_seconds": float,
    "molecules_per_on": int,
    "prior_p1": float,
    "counting_model": str,
}

_SPEC_KEYS = {
    "methods": str,
    "ts_grid_seconds": str,
    "ntx_grid": str,
    "n_symbols": int,
    "trials": int,
    "base_seed": int,
    "coverage": float,
    "m_max": int,
    "fixed_tau": float,
}


def parse_config(path: Path | str) -> ExperimentSpec:
    """Flat key = value config file; '#' starts a comment."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _CHANNEL_KEYS and key not in _SPEC_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = val

    try:
        chan_kwargs = {k: conv(values[k]) for k, conv in _CHANNEL_KEYS.items()
                       if k in values and k != "counting_model"}
        if "counting_model" in values:
            chan_kwargs["counting_model"] = CountingModel(
                values["counting_model"].lower())
        channel = ChannelConfig(**chan_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad channel config: {exc}") from exc

    spec_kwargs: dict = {}
    if "methods" in values:
        spec_kwargs["methods"] = tuple(
            v.strip() for v in values["methods"].split(",") if v.strip())
    if "ts_grid_seconds" in values:
        spec_kwargs["ts_grid"] = tuple(
            float(v) for v in values["ts_grid_seconds"].split(","))
    if "ntx_grid" in values:
        spec_kwargs["ntx_grid"] = tuple(
            int(v) for v in values["ntx_grid"].split(","))
    for key in ("n_symbols", "trials", "base_seed", "coverage", "m_max",
                "fixed_tau"):
        if key in values:
            spec_kwargs[key] = _SPEC_KEYS[key](values[key])
    return ExperimentSpec(channel=channel, **spec_kwargs)


def cell_seed(base_seed: int, method_idx: int, ts_idx: int, ntx_idx: int,
              trial: int) -> int:
    ss = np.random.SeedSequence(
        entropy=[base_seed, method_idx, ts_idx, ntx_idx, trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _cell_config(spec: ExperimentSpec, ts: float, ntx: int) -> ChannelConfig:
    return replace(spec.channel, ts_seconds=ts, molecules_per_on=ntx)


def run_method_trial(method: str, cfg: ChannelConfig, spec: ExperimentSpec,
                     seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """One trial: (bits, states, decisions, memory_order) for a method."""
    taps, table, m, _ = build_channel(cfg, coverage=spec.coverage,
                                      m_max=spec.m_max)
    if method == "genie_pa":
        rec = detect.run_pa_trace(cfg, taps, spec.n_symbols, seed)
        decisions = (rec.counts > spec.fixed_tau).astype(np.int64)
        return rec.bits, rec.states, decisions, m
    rec = simulate.run_trace(cfg, table, spec.n_symbols, seed,
                             mode=spec.mode, taps=taps)
    if method == "fixed":
        decisions = (rec.counts > spec.fixed_tau).astype(np.int64)
    elif method == "bamap":
        decisions = detect.run_detector(
            detect.BAMAPDetector(table, cfg.prior_p1), rec.counts)
    elif method == "soft_bamap":
        decisions = detect.run_detector(
            detect.SoftBAMAPDetector(table, cfg.prior_p1), rec.counts)
    elif method == "genie_mmse":
        det = detect.GenieMMSEDetector(taps, cfg)
        det.calibrate(table, seed + 1)
        decisions = det.detect(rec.counts, rec.states)
    else:
        raise ValueError(f"unknown method {method!r}")
    return rec.bits, rec.states, decisions, m


def _ber_cell(args):
    spec, method, mi, ts, ti, ntx, ni = args
    cfg = _cell_config(spec, ts, ntx)
    errors = 0
    total = 0
    first_seed = None
    m = 0
    for trial in range(spec.trials):
        seed = cell_seed(spec.base_seed, mi, ti, ni, trial)
        if first_seed is None:
            first_seed = seed
        bits, _, decisions, m = run_method_trial(method, cfg, spec, seed)
        errors += int(np.count_nonzero(bits != decisions))
        total += len(bits)
    ber = errors / total
    se = float(np.sqrt(max(ber * (1.0 - ber), 1.0 / total) / total))
    return {"method": method, "ts_seconds": ts, "ntx": ntx, "m": m,
            "ber": ber, "std_error": se, "n_bits": total, "seed": first_seed}


def _map_cells(fn, cells, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, cells))
    return [fn(c) for c in cells]


def run_ber_sweep(spec: ExperimentSpec, workers: int | None = None) -> list[dict]:
    cells = [(spec, method, mi, ts, ti, ntx, ni)
             for mi, method in enumerate(spec.methods)
             for ti, ts in enumerate(spec.ts_grid)
             for ni, ntx in enumerate(spec.ntx_grid)]
    return _map_cells(_ber_cell, cells, workers or spec.workers)


def _rate_cell(args):
    spec, method, mi, ts, ti = args
    ntx = spec.ntx_grid[0]
    cfg = _cell_config(spec, ts, ntx)
    seed = cell_seed(spec.base_seed, mi, ti, 0, 0)
    taps, table, m, _ = build_channel(cfg, coverage=spec.coverage,
                                      m_max=spec.m_max)
    ber = float("nan")
    if method == "channel":
        est = rates.estimate_channel_rate(cfg, table, spec.n_symbols, seed,
                                          mode=spec.mode, taps=taps)
    elif method == "fixed":
        rec = simulate.run_trace(cfg, table, spec.n_symbols, seed,
                                 mode=spec.mode, taps=taps)
        grid = rates.default_tau_grid(table, taps)
        tau, est = rates.sweep_fixed_threshold_rate(rec.counts, rec.bits,
                                                    grid, ts)
        ber = float(np.mean(rec.bits != (rec.counts > tau)))
    elif method == "genie_pa":
        rec = detect.run_pa_trace(cfg, taps, spec.n_symbols, seed)
        grid = rates.default_tau_grid(table, taps)
        best = None
        for tau in grid:
            decisions = (rec.counts > tau).astype(np.int64)
            cand = rates.estimate_genie_conditional_rate(
                rec.bits, decisions, rec.states, table.num_states, ts)
            if best is None or cand.rate > best[1].rate:
                best = (tau, cand, decisions)
        tau, est, decisions = best
        ber = float(np.mean(rec.bits != decisions))
    else:
        bits, states, decisions, m = run_method_trial(method, cfg, spec, seed)
        ber = float(np.mean(bits != decisions))
        if method == "genie_mmse":
            est = rates.estimate_genie_conditional_rate(
                bits, decisions, states, 1 << m, ts)
        else:
            est = rates.estimate_hard_decision_rate(bits, decisions, ts)
    return {"method": method, "ts_seconds": ts, "ntx": ntx, "m": m,
            "rate": est.rate, "std_error": est.std_error,
            "throughput": est.throughput, "ber": ber, "seed": seed}


def run_rate_sweep(spec: ExperimentSpec, workers: int | None = None) -> list[dict]:
    methods = tuple(spec.methods) + ("channel",)
    cells = [(spec, method, mi, ts, ti)
             for mi, method in enumerate(methods)
             for ti, ts in enumerate(spec.ts_grid)]
    return _map_cells(_rate_cell, cells, workers or spec.workers)


def run_taps_table(spec: ExperimentSpec) -> list[dict]:
    rows = []
    for ts in spec.ts_grid:
        cfg = _cell_config(spec, ts, spec.ntx_grid[0])
        m, capped = select_memory_order(cfg, coverage=spec.coverage,
                                        m_max=spec.m_max)
        taps = compute_taps(cfg, m)
        row = {"ts_seconds": ts, "m": m, "capped": int(capped),
               "sum_h": float(taps.taps.sum())}
        for k, h in enumerate(taps.taps):
            row[f"h_{k}"] = float(h)
        rows.append(row)
    return rows


def run_threshold_trace(spec: ExperimentSpec, n_symbols: int = 50) -> list[dict]:
    """Per-symbol true-state Gaussian bands and both thresholds."""
    cfg = spec.channel
    taps, table, m, _ = build_channel(cfg, coverage=spec.coverage,
                                      m_max=spec.m_max)
    seed = cell_seed(spec.base_seed, 0, 0, 0, 0)
    rec = simulate.run_trace(cfg, table, n_symbols, seed, mode=spec.mode,
                             taps=taps)
    det = detect.BAMAPDetector(table, cfg.prior_p1)
    rows = []
    for t in range(n_symbols):
        out = det.step(float(rec.counts[t]))
        s = int(rec.states[t])
        rows.append({
            "t": t, "bit": int(rec.bits[t]), "count": float(rec.counts[t]),
            "mu0": float(table.mean[0, s]),
            "sigma0": float(np.sqrt(table.var_floored[0, s])),
            "mu1": float(table.mean[1, s]),
            "sigma1": float(np.sqrt(table.var_floored[1, s])),
            "tau_bamap": out.statistic,
            "tau_fixed": spec.fixed_tau,
        })
    return rows


def write_csv(rows: list[dict], path: Path | str) -> None:
    if not rows:
        raise ValueError("no rows to write")
    fieldnames: list[str] = []
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, restval="")
        writer.writeheader()
        writer.writerows(rows)


def write_manifest(spec: ExperimentSpec, command: str,
                   path: Path | str) -> None:
    lines = {
        "command": command,
        "rng_algorithm": simulate.RNG_ALGORITHM,
        "seed_derivation":
            "SeedSequence([base_seed, method_idx, ts_idx, ntx_idx, trial])",
        "base_seed": spec.base_seed,
        "methods": ",".join(spec.methods),
        "ts_grid_seconds": ",".join(str(t) for t in spec.ts_grid),
        "ntx_grid": ",".join(str(n) for n in spec.ntx_grid),
        "n_symbols": spec.n_symbols,
        "trials": spec.trials,
        "coverage": spec.coverage,
        "m_max": spec.m_max,
        "fixed_tau": spec.fixed_tau,
        "mode": spec.mode,
        "counting_model": spec.channel.counting_model.value,
    }
    with open(path, "w") as fh:
        for key, val in lines.items():
            fh.write(f"{key} = {val}\n")
