"""
Channel Service - deterministic link budget and fading distributions.

Covers both hops: Friis path gain and molecular absorption for the THz hop,
alpha-mu multipath with antenna pointing error on top, and Nakagami-m for
the RF hop.
"""

import logging
import math
from typing import Callable, Optional, Union

import numpy as np
from scipy import special

from thzrf.errors import DomainError
from thzrf.schemas import (
    SPEED_OF_LIGHT, AlphaMuFading, ContourConfig, MeijerGSpec, NakagamiFading,
    PointingError, RfHopConfig, ThzHopConfig,
)
from thzrf.services.absorption import absorption_coefficient
from thzrf.services.mellin_barnes import meijer_g
from thzrf.services.specfun import gamma_upper_extended

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _elementwise(fn: Callable[[float], float], x: ArrayLike) -> ArrayLike:
    values = np.asarray(x, dtype=float)
    if values.ndim == 0:
        return fn(float(values))
    return np.array([fn(float(v)) for v in values.ravel()]).reshape(values.shape)


def _check_nonnegative(x: ArrayLike, what: str) -> np.ndarray:
    values = np.asarray(x, dtype=float)
    if np.any(values < 0) or np.any(np.isnan(values)):
        raise DomainError(f"{what} needs x >= 0")
    return values


# ---------------------------------------------------------------------------
# Link budget
# ---------------------------------------------------------------------------

def friis_gain(cfg: Union[ThzHopConfig, RfHopConfig]) -> float:
    """
    Deterministic amplitude gain h_d of a hop.

    h_d = c sqrt(G_t G_r) / (4 pi f) * d^(-eta/2), gains converted from dBi.
    """
    gains = math.sqrt(_db_to_linear(cfg.tx_gain_db) * _db_to_linear(cfg.rx_gain_db))
    return SPEED_OF_LIGHT * gains / (4.0 * math.pi * cfg.carrier_hz) * cfg.distance_m ** (
        -0.5 * cfg.path_loss_exp
    )


def absorption_gain(cfg: ThzHopConfig) -> float:
    """Amplitude gain exp(-kappa d / 2) of molecular absorption."""
    kappa = absorption_coefficient(cfg)
    return math.exp(-0.5 * kappa * cfg.distance_m)


# ---------------------------------------------------------------------------
# THz hop fading
# ---------------------------------------------------------------------------

def alpha_mu_pdf(f: AlphaMuFading, x: ArrayLike) -> ArrayLike:
    x = _check_nonnegative(x, "alpha_mu_pdf")
    log_norm = math.log(f.alpha) + f.mu * math.log(f.mu) - f.alpha * f.mu * math.log(f.omega) - special.gammaln(f.mu)
    with np.errstate(divide="ignore"):
        out = np.exp(log_norm + (f.alpha * f.mu - 1.0) * np.log(x) - f.mu * (x / f.omega) ** f.alpha)
    out = np.where(x > 0, out, 0.0 if f.alpha * f.mu > 1 else np.inf)
    return float(out) if out.ndim == 0 else out


def alpha_mu_cdf(f: AlphaMuFading, x: ArrayLike) -> ArrayLike:
    """alpha-mu envelope CDF 1 - Gamma(mu, mu x^alpha / Omega^alpha) / Gamma(mu)."""
    x = _check_nonnegative(x, "alpha_mu_cdf")
    out = special.gammainc(f.mu, f.mu * (x / f.omega) ** f.alpha)
    return float(out) if np.ndim(out) == 0 else out


def pointing_pdf(p: PointingError, x: ArrayLike) -> ArrayLike:
    x = _check_nonnegative(x, "pointing_pdf")
    out = np.where(x <= p.s0, p.phi * x ** (p.phi - 1.0) / p.s0 ** p.phi, 0.0)
    return float(out) if out.ndim == 0 else out


def pointing_cdf(p: PointingError, x: ArrayLike) -> ArrayLike:
    x = _check_nonnegative(x, "pointing_cdf")
    out = np.minimum(x / p.s0, 1.0) ** p.phi
    return float(out) if out.ndim == 0 else out


def composite_meijer_spec(f: AlphaMuFading, p: PointingError) -> MeijerGSpec:
    """G^{3,0}_{2,3}[. | 1, phi/alpha + 1; mu, 0, phi/alpha] of the composite CDF."""
    ratio = p.phi / f.alpha
    return MeijerGSpec(a_bot=(1.0, ratio + 1.0), b_top=(f.mu, 0.0, ratio))


def composite_argument(f: AlphaMuFading, p: PointingError, x: ArrayLike) -> ArrayLike:
    return f.mu * (np.asarray(x, dtype=float) / (f.omega * p.s0)) ** f.alpha


def composite_thz_cdf(f: AlphaMuFading, p: PointingError, x: ArrayLike,
                      contour: Optional[ContourConfig] = None) -> ArrayLike:
    """
    CDF of h1 = h_f1 h_p1 through its Meijer-G closed form.

    1 - (phi/alpha)/Gamma(mu) G^{3,0}_{2,3}[mu x^alpha / (Omega S0)^alpha | ...]
    """
    _check_nonnegative(x, "composite_thz_cdf")
    spec = composite_meijer_spec(f, p)
    scale = p.phi / (f.alpha * special.gamma(f.mu))

    def one(value: float) -> float:
        if value == 0.0:
            return 0.0
        z = float(composite_argument(f, p, value))
        return 1.0 - scale * meijer_g(spec, z, contour)

    return _elementwise(one, x)


def composite_thz_cdf_gamma(f: AlphaMuFading, p: PointingError, x: ArrayLike) -> ArrayLike:
    """
    Composite CDF via incomplete gammas, independent of Mellin-Barnes.

    The Meijer-G kernel Gamma(mu+s) / (s (s + phi/alpha)) splits into partial
    fractions, so F = P(mu, z) + z^{phi/alpha} Gamma(mu - phi/alpha, z) / Gamma(mu)
    with z = mu x^alpha / (Omega S0)^alpha.
    """
    _check_nonnegative(x, "composite_thz_cdf_gamma")
    ratio = p.phi / f.alpha

    def one(value: float) -> float:
        if value == 0.0:
            return 0.0
        z = float(composite_argument(f, p, value))
        tail = z ** ratio * gamma_upper_extended(f.mu - ratio, z) / special.gamma(f.mu)
        return float(special.gammainc(f.mu, z) + tail)

    return _elementwise(one, x)


def composite_thz_pdf(f: AlphaMuFading, p: PointingError, x: ArrayLike) -> ArrayLike:
    """
    PDF of h1: phi mu^{phi/alpha} x^{phi-1} / ((Omega S0)^phi Gamma(mu))
    times Gamma((alpha mu - phi)/alpha, mu x^alpha / (Omega S0)^alpha).

    A non-positive first gamma argument goes through the downward recurrence.

    Raises:
        DomainError: At x = 0 when the density does not vanish there
    """
    _check_nonnegative(x, "composite_thz_pdf")
    shape = (f.alpha * f.mu - p.phi) / f.alpha
    scale = f.omega * p.s0
    lead = p.phi * f.mu ** (p.phi / f.alpha) / (scale ** p.phi * special.gamma(f.mu))

    def one(value: float) -> float:
        if value == 0.0:
            if min(p.phi, f.alpha * f.mu) > 1.0:
                return 0.0
            raise DomainError("composite density is not zero at the origin; evaluate at x > 0")
        z = f.mu * (value / scale) ** f.alpha
        return float(lead * value ** (p.phi - 1.0) * gamma_upper_extended(shape, z))

    return _elementwise(one, x)


# ---------------------------------------------------------------------------
# RF hop fading
# ---------------------------------------------------------------------------

def nakagami_pdf(f: NakagamiFading, x: ArrayLike) -> ArrayLike:
    x = _check_nonnegative(x, "nakagami_pdf")
    log_norm = math.log(2.0) + f.m * math.log(f.m / f.omega_m) - special.gammaln(f.m)
    with np.errstate(divide="ignore"):
        out = np.exp(log_norm + (2.0 * f.m - 1.0) * np.log(x) - f.m * x * x / f.omega_m)
    out = np.where(x > 0, out, 0.0 if f.m > 0.5 else math.sqrt(2.0 / (math.pi * f.omega_m)))
    return float(out) if out.ndim == 0 else out


def nakagami_cdf(f: NakagamiFading, x: ArrayLike) -> ArrayLike:
    """Nakagami-m CDF 1 - Gamma(m, m x^2 / Omega_m) / Gamma(m)."""
    x = _check_nonnegative(x, "nakagami_cdf")
    out = special.gammainc(f.m, f.m * x * x / f.omega_m)
    return float(out) if np.ndim(out) == 0 else out
