"""Link budget and per-hop fading distributions."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from thzrf.errors import DomainError
from thzrf.schemas import (
    SPEED_OF_LIGHT, AlphaMuFading, NakagamiFading, PointingError, RfHopConfig, ThzHopConfig,
)
from thzrf.services.channel import (
    absorption_gain, alpha_mu_cdf, alpha_mu_pdf, composite_thz_cdf, composite_thz_cdf_gamma,
    composite_thz_pdf, friis_gain, nakagami_cdf, nakagami_pdf, pointing_cdf, pointing_pdf,
)
from thzrf.services.oracle import oracle_composite_cdf

FADING = AlphaMuFading(alpha=2.3, mu=2.25, omega=1.75)
POINTING = PointingError(phi=6.75, s0=0.56)


class TestLinkBudget:
    def test_friis_gain_by_hand(self):
        cfg = RfHopConfig(carrier_hz=8e9, distance_m=800.0, tx_gain_db=10.0, rx_gain_db=20.0)
        expected = SPEED_OF_LIGHT * math.sqrt(10.0 * 100.0) / (4.0 * math.pi * 8e9) / 800.0
        assert friis_gain(cfg) == pytest.approx(expected, rel=1e-14)

    def test_path_loss_exponent(self):
        base = RfHopConfig(distance_m=100.0)
        steeper = RfHopConfig(distance_m=100.0, path_loss_exp=3.0)
        assert friis_gain(steeper) == pytest.approx(friis_gain(base) / 10.0, rel=1e-12)

    def test_absorption_override(self):
        cfg = ThzHopConfig(absorption_override=0.01, distance_m=300.0)
        assert absorption_gain(cfg) == pytest.approx(math.exp(-1.5), rel=1e-14)

    def test_absorption_gain_below_one(self):
        assert 0.0 < absorption_gain(ThzHopConfig()) < 1.0

    def test_thz_gain_falls_with_distance(self):
        near = ThzHopConfig(distance_m=100.0)
        far = ThzHopConfig(distance_m=500.0)
        assert friis_gain(far) * absorption_gain(far) < friis_gain(near) * absorption_gain(near)


class TestSmallScaleFading:
    def test_alpha_mu_reduces_to_rayleigh(self):
        f = AlphaMuFading(alpha=2.0, mu=1.0, omega=1.3)
        x = np.linspace(0.0, 4.0, 17)
        assert_allclose(alpha_mu_cdf(f, x), 1.0 - np.exp(-(x / 1.3) ** 2), rtol=1e-12, atol=1e-15)

    def test_nakagami_m1_is_rayleigh(self):
        f = NakagamiFading(m=1.0, omega_m=2.0)
        x = np.linspace(0.0, 4.0, 17)
        assert_allclose(nakagami_cdf(f, x), 1.0 - np.exp(-x * x / 2.0), rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("pdf,cdf,params", [
        (alpha_mu_pdf, alpha_mu_cdf, FADING),
        (nakagami_pdf, nakagami_cdf, NakagamiFading(m=2.3, omega_m=1.5)),
        (pointing_pdf, pointing_cdf, POINTING),
    ])
    def test_density_integrates_to_cdf(self, pdf, cdf, params):
        for x in (0.2, 0.4, 0.55):
            area, _ = integrate.quad(lambda t: pdf(params, t), 0.0, x, epsabs=1e-13)
            assert area == pytest.approx(cdf(params, x), rel=1e-8)

    def test_pointing_saturates_at_s0(self):
        assert pointing_cdf(POINTING, 0.56) == pytest.approx(1.0)
        assert pointing_cdf(POINTING, 2.0) == 1.0
        assert pointing_pdf(POINTING, 0.7) == 0.0

    def test_negative_argument(self):
        with pytest.raises(DomainError):
            alpha_mu_cdf(FADING, -0.1)


class TestCompositeThz:
    """alpha-mu fading times pointing error."""

    X = np.geomspace(0.02, 3.0, 15)

    def test_meijer_matches_incomplete_gamma(self):
        assert_allclose(
            composite_thz_cdf(FADING, POINTING, self.X),
            composite_thz_cdf_gamma(FADING, POINTING, self.X),
            rtol=1e-9, atol=1e-13,
        )

    @pytest.mark.parametrize("x", [0.05, 0.3, 0.8, 1.5])
    def test_gamma_form_matches_composition_integral(self, x):
        oracle = oracle_composite_cdf(FADING, POINTING, x)
        assert composite_thz_cdf_gamma(FADING, POINTING, x) == pytest.approx(oracle.value, rel=1e-6)

    def test_pole_shape(self):
        """phi/alpha - mu = 0 falls back to the exponential integral."""
        f = AlphaMuFading(alpha=2.0, mu=1.5, omega=1.0)
        p = PointingError(phi=3.0, s0=0.9)
        for x in (0.1, 0.6):
            oracle = oracle_composite_cdf(f, p, x)
            assert composite_thz_cdf_gamma(f, p, x) == pytest.approx(oracle.value, rel=1e-6)

    def test_cdf_limits(self):
        assert composite_thz_cdf_gamma(FADING, POINTING, 0.0) == 0.0
        assert composite_thz_cdf_gamma(FADING, POINTING, 50.0) == pytest.approx(1.0, abs=1e-12)

    def test_density_integrates_to_cdf(self):
        for x in (0.1, 0.4, 1.0):
            area, _ = integrate.quad(lambda t: composite_thz_pdf(FADING, POINTING, t), 0.0, x,
                                     epsabs=1e-13, limit=200)
            assert area == pytest.approx(composite_thz_cdf_gamma(FADING, POINTING, x), rel=1e-7)
