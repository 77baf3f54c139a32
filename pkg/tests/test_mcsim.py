"""Channel samplers and the Monte Carlo ASER engine."""

import math

import numpy as np
import pytest
from scipy import stats

from thzrf.errors import StatisticsWarning
from thzrf.schemas import HqamScheme, NcfskScheme, RqamScheme, SimConfig, SimMode, sqam
from thzrf.services.aser import aser
from thzrf.services.channel import alpha_mu_cdf, nakagami_cdf, pointing_cdf
from thzrf.services.constellations import build_constellation
from thzrf.services.linkstats import CdfForm, snr_cdf_e2e
from thzrf.services.mcsim import (
    WEAK_FLAG, _flag_weak, detect_errors, dkw_band, empirical_cdf, partition_rng, run_mc,
    run_mc_coupled, sample_alpha_mu, sample_e2e_for_check, sample_nakagami, sample_pointing,
)


class TestStreams:
    def test_same_partition_same_draws(self):
        a = partition_rng(7, 3).random(5)
        b = partition_rng(7, 3).random(5)
        assert np.array_equal(a, b)

    def test_partitions_are_distinct(self):
        assert not np.array_equal(partition_rng(7, 0).random(5), partition_rng(7, 1).random(5))


class TestSamplers:
    """Kolmogorov-Smirnov checks against the analytical CDFs."""

    N = 100_000

    def test_alpha_mu(self, reference_model):
        f = reference_model.thz_fading
        samples = sample_alpha_mu(f, partition_rng(11, 0), self.N)
        assert stats.kstest(samples, lambda x: alpha_mu_cdf(f, x)).pvalue > 1e-3

    def test_pointing(self, reference_model):
        p = reference_model.pointing
        samples = sample_pointing(p, partition_rng(12, 0), self.N)
        assert samples.max() <= p.s0
        assert stats.kstest(samples, lambda x: pointing_cdf(p, x)).pvalue > 1e-3

    def test_nakagami(self, reference_model):
        f = reference_model.rf_fading
        samples = sample_nakagami(f, partition_rng(13, 0), self.N)
        assert stats.kstest(samples, lambda x: nakagami_cdf(f, x)).pvalue > 1e-3

    def test_end_to_end_snr_within_dkw_band(self, link_30db):
        n = 50_000
        samples = sample_e2e_for_check(link_30db, n, seed=5, partitions=4)
        assert samples.size == n
        grid = np.quantile(samples, np.linspace(0.02, 0.98, 40))
        exact = snr_cdf_e2e(link_30db, grid, form=CdfForm.GAMMA)
        assert np.max(np.abs(empirical_cdf(samples, grid) - exact)) < dkw_band(n, 0.999)


class TestDetection:
    @pytest.mark.parametrize("scheme", [sqam(16), HqamScheme(m=16), NcfskScheme(m=4)], ids=lambda s: s.label)
    def test_noiseless_detection_is_error_free(self, scheme):
        rng = partition_rng(1, 0)
        constellation = build_constellation(scheme)
        symbols = rng.integers(0, constellation.label_count, 2000)
        lam = np.full(symbols.size, 1e12)
        assert not detect_errors(constellation, symbols, lam, rng).any()

    def test_noise_only_fsk_is_a_coin_flip(self):
        rng = partition_rng(2, 0)
        constellation = build_constellation(NcfskScheme(m=2))
        symbols = rng.integers(0, 2, 40_000)
        rate = detect_errors(constellation, symbols, np.full(symbols.size, 1e-12), rng).mean()
        assert rate == pytest.approx(0.5, abs=0.02)


class TestRunMc:
    def test_deterministic(self, link_30db):
        cfg = SimConfig(trials=40_000, seed=3, partitions=4)
        assert run_mc(link_30db, sqam(4), cfg) == run_mc(link_30db, sqam(4), cfg)

    def test_coupled_equals_single_scheme_run(self, link_30db):
        cfg = SimConfig(trials=40_000, seed=3, partitions=2)
        coupled = run_mc_coupled(link_30db, [sqam(4), RqamScheme(m_i=4, m_q=2)], cfg)
        assert set(coupled) == {"4-sqam", "4x2-rqam"}
        assert coupled["4-sqam"] == run_mc(link_30db, sqam(4), cfg)

    def test_conditional_matches_analytical(self, link_30db):
        cfg = SimConfig(trials=1_000_000, seed=17, partitions=4)
        scheme = sqam(4)
        result = run_mc(link_30db, scheme, cfg)
        assert result.trials == 1_000_000
        assert abs(result.aser - aser(link_30db, scheme)) < 4.0 * result.stderr

    def test_partition_count_consistency(self, link_30db):
        scheme = sqam(4)
        one = run_mc(link_30db, scheme, SimConfig(trials=200_000, seed=9, partitions=1))
        many = run_mc(link_30db, scheme, SimConfig(trials=200_000, seed=9, partitions=16))
        assert abs(one.aser - many.aser) < 4.0 * math.hypot(one.stderr, many.stderr)

    def test_zero_noise_limit(self, reference_model):
        cfg = SimConfig(trials=100_000, seed=4, partitions=4, mode=SimMode.SYMBOL_LEVEL)
        result = run_mc(reference_model.with_snr_db(120.0), sqam(4), cfg)
        assert result.aser == 0.0

    def test_weak_statistics_flag(self):
        with pytest.warns(StatisticsWarning):
            assert _flag_weak("x", 1e-6, 1e-6) == (WEAK_FLAG,)
        assert _flag_weak("x", 1e-2, 1e-4) == ()

    @pytest.mark.slow
    def test_symbol_level_close_to_conditional(self, reference_model):
        model = reference_model.with_snr_db(25.0)
        scheme = sqam(4)
        symbol = run_mc(model, scheme, SimConfig(trials=400_000, seed=21, partitions=4, mode=SimMode.SYMBOL_LEVEL))
        conditional = run_mc(model, scheme, SimConfig(trials=400_000, seed=21, partitions=4))
        assert conditional.aser >= 1e-3
        assert symbol.aser == pytest.approx(conditional.aser, rel=0.1)

    @pytest.mark.slow
    @pytest.mark.parametrize("scheme,snr_db", [
        (HqamScheme(m=4), 25.0),
        (HqamScheme(m=16), 30.0),
        (NcfskScheme(m=4), 30.0),
    ], ids=["4-hqam", "16-hqam", "4-ncfsk"])
    def test_symbol_level_hexagonal_and_noncoherent(self, reference_model, scheme, snr_db):
        """Hexagonal nearest-neighbour and noncoherent envelope detection against P(e | lam)."""
        model = reference_model.with_snr_db(snr_db)
        symbol = run_mc(model, scheme, SimConfig(trials=400_000, seed=33, partitions=4, mode=SimMode.SYMBOL_LEVEL))
        conditional = run_mc(model, scheme, SimConfig(trials=400_000, seed=33, partitions=4))
        assert conditional.aser >= 1e-3
        assert symbol.aser == pytest.approx(conditional.aser, rel=0.1)
        assert conditional.aser == pytest.approx(aser(model, scheme), rel=0.05)

    @pytest.mark.slow
    def test_ten_million_trials(self, link_40db):
        scheme = RqamScheme(m_i=4, m_q=2)
        result = run_mc(link_40db, scheme, SimConfig(trials=10_000_000, seed=2024, partitions=8))
        assert abs(result.aser - aser(link_40db, scheme)) < 3.5 * result.stderr
