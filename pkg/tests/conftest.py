import numpy as np
import pytest

from mcisi.channel import (ChannelConfig, CountingModel, TapSet,
                           build_state_table, compute_taps)


@pytest.fixture
def paper_cfg():
    """Geometry used throughout the figure captions."""
    return ChannelConfig(tx_distance_um=12.5, rx_radius_um=5.0,
                         diffusion_um2_s=79.4, ts_seconds=0.25,
                         molecules_per_on=1000)


@pytest.fixture
def small_tapset():
    """Hand-checkable m=1 Binomial tap set: h = (0.1, 0.05)."""
    taps = np.array([0.1, 0.05])
    return TapSet(taps=taps, var_factors=taps * (1 - taps), memory_order=1,
                  counting_model=CountingModel.BINOMIAL)


@pytest.fixture
def small_table(small_tapset, paper_cfg):
    return build_state_table(small_tapset, paper_cfg)


def make_table(cfg, m):
    return build_state_table(compute_taps(cfg, m), cfg)
