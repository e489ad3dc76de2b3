"""Belief-adaptive detection for molecular-communication ISI channels."""

from .channel import (ChannelConfig, CountingModel, StateTable, TapSet,
                      build_channel, build_state_table, compute_taps,
                      hit_probability, select_memory_order)
from .belief import (Belief, ForwardBelief, gaussian_log_density, init_belief,
                     predictive_density, update_belief)
from .detect import (BAMAPDetector, DetectorOutput, FixedThresholdDetector,
                     GenieMMSEDetector, MixtureMoments, SoftBAMAPDetector,
                     bamap_moments, bamap_threshold, fixed_threshold_decide,
                     soft_bamap_llr)
from .rates import (RateEstimate, estimate_channel_rate,
                    estimate_genie_conditional_rate,
                    estimate_hard_decision_rate, info_density_increment,
                    sweep_fixed_threshold_rate)
from .simulate import RunRecord, generate_bits, run_trace

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
