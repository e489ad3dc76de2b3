"""Causal forward belief over ISI states, in log domain.

The belief alpha_t(s) = Pr{S_t = s | Y^{t-1}} is shared by both
belief-adaptive detectors and the information-rate estimator.  All
mixture sums go through log-sum-exp; the variance floor in the state
table keeps every density finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import StateTable

_LOG_2PI = float(np.log(2.0 * np.pi))


def log_sum_exp(a: np.ndarray) -> float:
    """log(sum(exp(a))) over all elements; cheap and -inf safe."""
    hi = np.max(a)
    if not np.isfinite(hi):
        return float(hi)
    return float(hi + np.log(np.sum(np.exp(a - hi))))

# Incremented by gaussian_log_density with the number of scalar density
# evaluations performed; used by the complexity instrumentation tests.
_density_eval_count = 0
_counting = False


def reset_density_eval_count() -> None:
    """Zero the counter and start counting density evaluations."""
    global _density_eval_count, _counting
    _density_eval_count = 0
    _counting = True


def stop_density_eval_count() -> int:
    global _counting
    _counting = False
    return _density_eval_count


def density_eval_count() -> int:
    return _density_eval_count


def _set_counting(on: bool) -> None:
    global _counting
    _counting = on


def gaussian_log_density(y, mu, var):
    """log N(y; mu, var). Inputs broadcast; var must already be floored."""
    global _density_eval_count
    diff = np.asarray(y, dtype=np.float64) - mu
    out = -0.5 * (_LOG_2PI + np.log(var) + diff * diff / var)
    if _counting:
        _density_eval_count += np.size(out)
    return out


@dataclass
class Belief:
    """Normalized log-probability vector over the 2^m ISI states."""

    log_weights: np.ndarray

    @property
    def num_states(self) -> int:
        return len(self.log_weights)

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def normalized_copy(self) -> "Belief":
        return Belief(self.log_weights - log_sum_exp(self.log_weights))


def init_belief(num_states: int, kind: str = "cold") -> Belief:
    """Point mass on state 0 (simulator cold start) or uniform."""
    if num_states < 1 or num_states & (num_states - 1):
        raise ValueError("num_states must be a power of two")
    if kind == "cold":
        w = np.full(num_states, -np.inf)
        w[0] = 0.0
    elif kind == "uniform":
        w = np.full(num_states, -np.log(num_states))
    else:
        raise ValueError(f"unknown belief init {kind!r}")
    return Belief(log_weights=w)


class ForwardBelief:
    """Sequential forward recursion bound to one state table and prior.

    Owns scratch buffers; one instance per run (updates are causal and
    cannot be parallelized within a run).
    """

    def __init__(self, table: StateTable, p1: float, init: str = "cold"):
        self.table = table
        self.p1 = p1
        self.log_prior = np.log([1.0 - p1, p1])
        self.log_alpha = init_belief(table.num_states, init).log_weights.copy()
        m = table.memory_order
        if m > 0:
            succ = np.arange(table.num_states)
            # predecessors of s': drop the newest bit, restore either value
            # of the bit that left the memory window
            self._x_new = succ & 1
            self._pred_lo = succ >> 1
            self._pred_hi = (succ >> 1) | (1 << (m - 1))
            if _njit is not None:
                # kernel scratch, preallocated: per-call np.empty at large
                # 2^m would go through mmap and dominate the step time
                self._w0 = np.empty(table.num_states)
                self._w1 = np.empty(table.num_states)
                self._new = np.empty(table.num_states)

    def belief(self) -> Belief:
        return Belief(log_weights=self.log_alpha.copy())

    def conditional_log_likelihoods(self, y: float) -> np.ndarray:
        """log f(y | s, x) for all states, shape (2, 2^m)."""
        return gaussian_log_density(y, self.table.mean, self.table.var_floored)

    def joint_log_weights(self, y: float) -> np.ndarray:
        """log [alpha_t(s) p_x f(y|s,x)], shape (2, 2^m)."""
        return (self.log_alpha[None, :] + self.log_prior[:, None]
                + self.conditional_log_likelihoods(y))

    def predictive_log_density(self, y: float) -> float:
        """log p(y_t | Y^{t-1}), the belief-and-prior weighted mixture."""
        return log_sum_exp(self.joint_log_weights(y))

    def update(self, y: float) -> None:
        """One forward-recursion step followed by normalization."""
        self.update_from_joint(self.joint_log_weights(y))

    def step_with_scores(self, y: float) -> tuple[float, float]:
        """Advance one symbol, returning the pre-update mixture scores.

        Scores are lse_x = log sum_s alpha_t(s) f(y | s, x); together with
        the prior they give both the mixture LLR and the predictive density.
        Uses the fused compiled kernel when available.  Counts as 2 * 2^m
        density evaluations toward the instrumentation counter.
        """
        global _density_eval_count
        table = self.table
        if _counting:
            _density_eval_count += 2 * table.num_states
        if _njit is not None and table.memory_order > 0:
            lse0, lse1 = _belief_step_kernel(
                self.log_alpha, table.mean[0], table.mean[1],
                table.log_var_floored[0], table.log_var_floored[1],
                table.inv_var_floored[0], table.inv_var_floored[1],
                y, self.log_prior[0], self.log_prior[1],
                self._w0, self._w1, self._new)
            self.log_alpha, self._new = self._new, self.log_alpha
            return lse0, lse1
        was_counting = _counting
        if was_counting:
            _set_counting(False)
        weighted = self.log_alpha[None, :] + self.conditional_log_likelihoods(y)
        lse0 = log_sum_exp(weighted[0])
        lse1 = log_sum_exp(weighted[1])
        self.update_from_joint(weighted + self.log_prior[:, None])
        if was_counting:
            _set_counting(True)
        return lse0, lse1

    def update_from_joint(self, c: np.ndarray) -> None:
        """Advance using already-computed joint log weights (shape (2, 2^m))."""
        if self.table.memory_order == 0:
            self.log_alpha[0] = 0.0
            return
        new = np.logaddexp(c[self._x_new, self._pred_lo],
                           c[self._x_new, self._pred_hi])
        total = log_sum_exp(new)
        if not np.isfinite(total):
            raise FloatingPointError("belief update underflowed to zero mass")
        self.log_alpha = new - total


try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is an optional speedup
    _njit = None

if _njit is not None:

    @_njit(cache=True)
    def _belief_step_kernel(log_alpha, mu0, mu1, lv0, lv1, iv0, iv1,
                            y, lp0, lp1, w0, w1, new):
        """Fused density evaluation, mixture scores, and forward update.

        Fills `new` with the updated log belief (w0, w1, new are
        caller-owned scratch) and returns (lse0, lse1) where lse_x is
        log sum_s alpha(s) f(y | s, x) over the pre-update belief.
        """
        S = log_alpha.size
        m0 = -np.inf
        m1 = -np.inf
        for s in range(S):
            d0 = y - mu0[s]
            w0[s] = log_alpha[s] - 0.5 * (_LOG_2PI + lv0[s] + d0 * d0 * iv0[s])
            if w0[s] > m0:
                m0 = w0[s]
            d1 = y - mu1[s]
            w1[s] = log_alpha[s] - 0.5 * (_LOG_2PI + lv1[s] + d1 * d1 * iv1[s])
            if w1[s] > m1:
                m1 = w1[s]
        acc0 = 0.0
        acc1 = 0.0
        for s in range(S):
            acc0 += np.exp(w0[s] - m0)
            acc1 += np.exp(w1[s] - m1)
        lse0 = m0 + np.log(acc0)
        lse1 = m1 + np.log(acc1)

        half = S >> 1
        nmax = -np.inf
        for sp in range(S):
            lo = sp >> 1
            hi = lo | half
            if sp & 1:
                a = w1[lo] + lp1
                b = w1[hi] + lp1
            else:
                a = w0[lo] + lp0
                b = w0[hi] + lp0
            if b > a:
                a, b = b, a
            v = a if b == -np.inf else a + np.log1p(np.exp(b - a))
            new[sp] = v
            if v > nmax:
                nmax = v
        acc = 0.0
        for sp in range(S):
            acc += np.exp(new[sp] - nmax)
        z = nmax + np.log(acc)
        for sp in range(S):
            new[sp] -= z
        return lse0, lse1


def update_belief(b: Belief, y: float, table: StateTable, p1: float) -> Belief:
    """Functional single-step update of a standalone belief."""
    engine = ForwardBelief(table, p1)
    engine.log_alpha = b.log_weights.copy()
    engine.update(y)
    return engine.belief()


def predictive_density(b: Belief, y: float, table: StateTable,
                       p1: float) -> float:
    """log p(y | belief) without advancing the belief."""
    engine = ForwardBelief(table, p1)
    engine.log_alpha = b.log_weights.copy()
    return engine.predictive_log_density(y)
