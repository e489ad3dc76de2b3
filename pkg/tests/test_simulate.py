import numpy as np
import pytest

from mcisi.channel import CountingModel, TapSet, build_state_table
from mcisi.simulate import (BINOMIAL, GAUSSIAN, evolve_states, generate_bits,
                            make_rng, run_trace, sample_count_binomial,
                            sample_count_gaussian)


class TestGenerateBits:
    def test_degenerate_priors(self):
        assert not generate_bits(500, 0.0, 1).any()
        assert generate_bits(500, 1.0, 1).all()

    def test_sample_mean(self):
        bits = generate_bits(10**6, 0.5, 123)
        assert abs(bits.mean() - 0.5) < 0.002

    def test_deterministic(self):
        np.testing.assert_array_equal(generate_bits(1000, 0.3, 9),
                                      generate_bits(1000, 0.3, 9))


class TestEvolveStates:
    def test_shift_register(self):
        bits = np.array([1, 0, 1, 1, 0])
        states = evolve_states(bits, 2)
        # state bit 0 holds the previous input
        np.testing.assert_array_equal(states, [0b00, 0b01, 0b10, 0b01, 0b11])

    def test_warm_start(self):
        bits = np.array([0, 0])
        states = evolve_states(bits, 2, s0=0b11)
        np.testing.assert_array_equal(states, [0b11, 0b10])

    def test_matches_next_state_table(self, paper_cfg, small_table):
        bits = generate_bits(200, 0.5, 4)
        states = evolve_states(bits, small_table.memory_order)
        for t in range(199):
            assert states[t + 1] == small_table.next_state[states[t], bits[t]]


class TestGaussianSampling:
    def test_empty_state_is_floored_point_mass(self, small_table):
        rng = make_rng(0)
        draws = [sample_count_gaussian(0, 0, small_table, rng)
                 for _ in range(1000)]
        assert np.max(np.abs(draws)) < 5e-3

    def test_empirical_mean(self, small_table):
        rng = make_rng(1)
        draws = np.array([sample_count_gaussian(1, 0, small_table, rng)
                          for _ in range(10**5)])
        mu = small_table.mean[1, 0]
        sigma = np.sqrt(small_table.variance[1, 0])
        assert abs(draws.mean() - mu) < 4 * sigma / np.sqrt(10**5)

    def test_empirical_variance(self, small_table):
        rng = make_rng(2)
        draws = np.array([sample_count_gaussian(1, 1, small_table, rng)
                          for _ in range(10**5)])
        assert draws.var() == pytest.approx(137.5, rel=0.05)


class TestBinomialSampling:
    def test_all_zero_history(self, small_tapset, paper_cfg):
        rng = make_rng(3)
        assert sample_count_binomial([0, 0], small_tapset, paper_cfg, rng) == 0

    def test_certain_arrival(self, paper_cfg):
        taps = TapSet(taps=np.array([1.0 - 1e-15]),
                      var_factors=np.array([0.0]), memory_order=0,
                      counting_model=CountingModel.BINOMIAL)
        rng = make_rng(4)
        assert sample_count_binomial([1], taps, paper_cfg, rng) == 1000

    def test_empirical_mean(self, small_tapset, paper_cfg):
        rng = make_rng(5)
        draws = np.array([
            sample_count_binomial([1, 1], small_tapset, paper_cfg, rng)
            for _ in range(10**5)])
        assert abs(draws.mean() - 150.0) < 1.5


class TestRunTrace:
    def test_all_zero_bits_give_floor_noise(self, paper_cfg, small_table):
        rec = run_trace(paper_cfg, small_table, 100, 6,
                        bits=np.zeros(100, dtype=np.int64))
        assert np.max(np.abs(rec.counts)) < 5e-3

    def test_same_seed_identical(self, paper_cfg, small_table):
        a = run_trace(paper_cfg, small_table, 500, 42)
        b = run_trace(paper_cfg, small_table, 500, 42)
        np.testing.assert_array_equal(a.bits, b.bits)
        np.testing.assert_array_equal(a.counts, b.counts)

    def test_state_occupancy_matches_stationary(self, paper_cfg):
        from tests.conftest import make_table
        table = make_table(paper_cfg, 3)
        rec = run_trace(paper_cfg, table, 10**5, 8)
        occ = np.bincount(rec.states, minlength=8) / 10**5
        # stationary law of the de Bruijn chain is product Bernoulli(1/2)
        tv = 0.5 * np.abs(occ - 1.0 / 8).sum()
        assert tv < 0.01

    def test_modes_agree_on_moments(self, paper_cfg, small_tapset):
        # per-(x, s) agreement needs N*h >= 20; h=(0.1, 0.05), N=1000
        table = build_state_table(small_tapset, paper_cfg)
        n = 10**5
        bits = generate_bits(n, 0.5, 11)
        g = run_trace(paper_cfg, table, n, 11, mode=GAUSSIAN, bits=bits)
        b = run_trace(paper_cfg, table, n, 11, mode=BINOMIAL,
                      taps=small_tapset, bits=bits)
        for x in (0, 1):
            for s in (0, 1):
                sel = (g.bits == x) & (g.states == s)
                if table.mean[x, s] == 0:
                    continue
                mg, mb = g.counts[sel].mean(), b.counts[sel].mean()
                vg, vb = g.counts[sel].var(), b.counts[sel].var()
                assert mb == pytest.approx(mg, rel=0.01)
                assert vb == pytest.approx(vg, rel=0.05)

    def test_csv_round_trip(self, paper_cfg, small_table, tmp_path):
        rec = run_trace(paper_cfg, small_table, 50, 13)
        path = tmp_path / "trace.csv"
        rec.to_csv(path)
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "t,bit,state,count"
        assert len(rows) == 51
