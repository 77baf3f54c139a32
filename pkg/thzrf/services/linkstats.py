"""
Link Statistics Service - per-hop and end-to-end SNR distributions.

The DF relay forwards only what it decodes, so the end-to-end SNR is
min(lam1, lam2) and its CDF is F1 + F2 - F1 F2. In closed form:

    F(lam) = 1 - B G^{3,0}_{2,3}[mu (A lam)^{alpha/2} | ...] Gamma(m, C lam)

The MGF is one minus a bivariate Fox-H, and the high-SNR CDF is a sum of
three power laws whose smallest exponent is the diversity order.
"""

import logging
import math
import warnings
from enum import Enum
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import special

from thzrf.config import settings
from thzrf.errors import DomainError, PoleWarning
from thzrf.schemas import (
    AlphaMuFading, ContourConfig, FoxHSpec, LinkConstants, NakagamiFading, PointingError,
    PowerNoise, RfHopConfig, ThzHopConfig,
)
from thzrf.services.channel import (
    absorption_gain, composite_meijer_spec, composite_thz_pdf, friis_gain,
)
from thzrf.services.integrals import i2_spec, integral_i2
from thzrf.services.mellin_barnes import fox_h_bivariate, meijer_g
from thzrf.services.specfun import gamma_upper_extended

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class CdfForm(str, Enum):
    """Evaluation route of the THz CDF."""
    MEIJER = "meijer"
    GAMMA = "incomplete-gamma"


class AsymptoticTerms(NamedTuple):
    """Coefficients K of F(lam) ~ sum K lam^nu, with the exponents nu."""
    r_coef: float
    r_exp: float
    t_coef: float
    t_exp: float
    c_coef: float
    c_exp: float

    def pairs(self) -> Tuple[Tuple[float, float], ...]:
        return ((self.r_coef, self.r_exp), (self.t_coef, self.t_exp), (self.c_coef, self.c_exp))


class SnrModel(BaseModel):
    """
    Everything that fixes the two hop SNR distributions.

    Derived constants are properties, so a changed copy never carries
    stale values.
    """
    model_config = ConfigDict(frozen=True)

    thz: ThzHopConfig = ThzHopConfig()
    thz_fading: AlphaMuFading = AlphaMuFading()
    pointing: PointingError = PointingError()
    rf: RfHopConfig = RfHopConfig()
    rf_fading: NakagamiFading = NakagamiFading()
    power: PowerNoise = PowerNoise()

    @property
    def h_d1(self) -> float:
        return friis_gain(self.thz)

    @property
    def h_a1(self) -> float:
        return absorption_gain(self.thz)

    @property
    def h_d2(self) -> float:
        return friis_gain(self.rf)

    @property
    def thz_gain(self) -> float:
        """P_s |h_d1|^2 |h_a1|^2 / N1, the SNR per unit |h1|^2."""
        return self.power.p_s * (self.h_d1 * self.h_a1) ** 2 / self.power.n0

    @property
    def rf_gain(self) -> float:
        """P_r |h_d2|^2 / N2, the SNR per unit |h2|^2."""
        return self.power.p_r * self.h_d2 ** 2 / self.power.n0

    @property
    def A(self) -> float:
        return 1.0 / (self.thz_gain * (self.thz_fading.omega * self.pointing.s0) ** 2)

    @property
    def B(self) -> float:
        return self.constants().B

    @property
    def C(self) -> float:
        return self.rf_fading.m / (self.rf_gain * self.rf_fading.omega_m)

    @property
    def R(self) -> float:
        return asymptotic_terms(self).r_coef

    @property
    def T_const(self) -> float:
        return asymptotic_terms(self).t_coef

    def constants(self) -> LinkConstants:
        return LinkConstants(
            alpha=self.thz_fading.alpha, mu=self.thz_fading.mu, phi=self.pointing.phi,
            m=self.rf_fading.m, A=self.A, C=self.C,
        )

    def with_snr_db(self, snr_db: float) -> "SnrModel":
        """Tie P_s = P_r to one average transmit SNR at the current noise level."""
        return self.model_copy(update={"power": PowerNoise.from_snr_db(snr_db, self.power.n0)})

    def with_omega_m(self, omega_m: float) -> "SnrModel":
        return self.model_copy(update={"rf_fading": NakagamiFading(m=self.rf_fading.m, omega_m=omega_m)})

    def with_distances(self, d_sr: float, d_rd: float) -> "SnrModel":
        """Copy with new hop lengths; non-positive lengths fail validation."""
        return self.model_copy(update={
            "thz": ThzHopConfig(**{**self.thz.model_dump(), "distance_m": d_sr}),
            "rf": RfHopConfig(**{**self.rf.model_dump(), "distance_m": d_rd}),
        })


def _check_lam(lam: ArrayLike, what: str) -> np.ndarray:
    values = np.asarray(lam, dtype=float)
    if np.any(values < 0) or np.any(np.isnan(values)):
        raise DomainError(f"{what} needs lam >= 0")
    return values


def _elementwise(fn, lam: np.ndarray) -> ArrayLike:
    if lam.ndim == 0:
        return fn(float(lam))
    return np.array([fn(float(v)) for v in lam.ravel()]).reshape(lam.shape)


def _meijer_kernel(model: SnrModel, lam: float, contour: Optional[ContourConfig]) -> float:
    """G^{3,0}_{2,3}[mu (A lam)^{alpha/2} | ...] by contour quadrature."""
    f = model.thz_fading
    spec = composite_meijer_spec(f, model.pointing)
    return meijer_g(spec, f.mu * (model.A * lam) ** (0.5 * f.alpha), contour)


def meijer_kernel_gamma(k: LinkConstants, lam: float) -> float:
    """
    The same G value from incomplete gammas:
    (alpha/phi) [Gamma(mu, z) - z^{phi/alpha} Gamma(mu - phi/alpha, z)].
    """
    ratio = k.phi / k.alpha
    z = k.mu * (k.A * lam) ** (0.5 * k.alpha)
    upper = special.gamma(k.mu) * special.gammaincc(k.mu, z)
    return (upper - z ** ratio * gamma_upper_extended(k.mu - ratio, z)) / ratio


def _thz_survival(model: SnrModel, lam: float, form: CdfForm,
                  contour: Optional[ContourConfig]) -> float:
    k = model.constants()
    scale = k.phi / (k.alpha * special.gamma(k.mu))
    if form == CdfForm.MEIJER:
        return scale * _meijer_kernel(model, lam, contour)
    return scale * meijer_kernel_gamma(k, lam)


def snr_cdf_thz(model: SnrModel, lam: ArrayLike, form: CdfForm = CdfForm.MEIJER,
                contour: Optional[ContourConfig] = None) -> ArrayLike:
    """F_lam1(lam) = 1 - (phi/alpha)/Gamma(mu) G^{3,0}_{2,3}[mu (A lam)^{alpha/2} | ...]."""
    lam = _check_lam(lam, "snr_cdf_thz")

    def one(value: float) -> float:
        if value == 0.0:
            return 0.0
        return 1.0 - _thz_survival(model, value, form, contour)

    return _elementwise(one, lam)


def snr_cdf_rf(model: SnrModel, lam: ArrayLike) -> ArrayLike:
    """F_lam2(lam) = 1 - Gamma(m, C lam) / Gamma(m)."""
    lam = _check_lam(lam, "snr_cdf_rf")
    out = special.gammainc(model.rf_fading.m, model.C * lam)
    return float(out) if np.ndim(out) == 0 else out


def snr_cdf_e2e(model: SnrModel, lam: ArrayLike, form: CdfForm = CdfForm.MEIJER,
                contour: Optional[ContourConfig] = None) -> ArrayLike:
    """
    End-to-end SNR CDF in the closed form 1 - B G(.) Gamma(m, C lam).

    Args:
        model: Link model
        lam: SNR value(s), non-negative
        form: MEIJER evaluates G by contour quadrature, GAMMA by incomplete gammas
        contour: Quadrature settings for the MEIJER form
    """
    lam = _check_lam(lam, "snr_cdf_e2e")
    m = model.rf_fading.m

    def one(value: float) -> float:
        if value == 0.0:
            return 0.0
        rf_survival = special.gammaincc(m, model.C * value)
        return 1.0 - _thz_survival(model, value, form, contour) * rf_survival

    return _elementwise(one, lam)


def snr_cdf_e2e_combined(model: SnrModel, lam: ArrayLike, form: CdfForm = CdfForm.MEIJER,
                         contour: Optional[ContourConfig] = None) -> ArrayLike:
    """F1 + F2 - F1 F2 from the per-hop CDFs."""
    f1 = np.asarray(snr_cdf_thz(model, lam, form, contour))
    f2 = np.asarray(snr_cdf_rf(model, lam))
    out = f1 + f2 - f1 * f2
    return float(out) if out.ndim == 0 else out


def snr_pdf_e2e(model: SnrModel, lam: ArrayLike) -> ArrayLike:
    """
    End-to-end SNR density f1 (1 - F2) + f2 (1 - F1).

    The THz density follows from the composite envelope density through
    lam = g |h1|^2; both survival functions use the incomplete-gamma route.
    """
    lam = _check_lam(lam, "snr_pdf_e2e")
    gain = model.thz_gain
    m, c = model.rf_fading.m, model.C

    def one(value: float) -> float:
        if value == 0.0:
            raise DomainError("end-to-end density is evaluated at lam > 0")
        envelope = math.sqrt(value / gain)
        f1 = composite_thz_pdf(model.thz_fading, model.pointing, envelope) / (2.0 * math.sqrt(value * gain))
        f2 = math.exp(m * math.log(c) + (m - 1.0) * math.log(value) - c * value - special.gammaln(m))
        s1 = _thz_survival(model, value, CdfForm.GAMMA, None)
        s2 = special.gammaincc(m, c * value)
        return float(f1 * s2 + f2 * s1)

    return _elementwise(one, lam)


def mgf_spec(model: SnrModel, s: float, contour: Optional[ContourConfig] = None) -> FoxHSpec:
    """Fox-H spec of the MGF; identical to the I2 spec at chi1 = 0, chi2 = s."""
    return i2_spec(model.constants(), 0.0, s, contour)


def mgf_e2e(model: SnrModel, s: float, contour: Optional[ContourConfig] = None) -> float:
    """
    M(s) = E[e^{-s lam_e}] = 1 - B H[mu (A/s)^{alpha/2}, C/s].

    The Fox-H arguments scale with s, and the contour offsets follow their
    logarithms, so one code path covers s over many decades.
    """
    if not s > 0:
        raise DomainError(f"MGF needs s > 0, got {s}")
    k = model.constants()
    value = 1.0 - k.B * fox_h_bivariate(mgf_spec(model, s, contour))
    logger.debug(f"M({s:g}) = {value:.12g}")
    return value


def mgf_e2e_via_i2(model: SnrModel, s: float) -> float:
    """M(s) = 1 - B s I2(0, s); same Fox-H, reached through the integral helper."""
    k = model.constants()
    return 1.0 - k.B * s * integral_i2(k, 0.0, s)


def _is_pole(phi: float, alpha: float, mu: float) -> bool:
    shift = phi / alpha - mu
    nearest = round(shift)
    return nearest >= 0 and abs(shift - nearest) <= 1e-12 * max(1.0, abs(shift))


def on_asymptotic_pole(model: SnrModel) -> bool:
    """True when the asymptotic CDF needs a perturbed phi."""
    return _is_pole(model.pointing.phi, model.thz_fading.alpha, model.thz_fading.mu)


def pole_safe_phi(alpha: float, mu: float, phi: float, perturb_poles: bool = True) -> float:
    """
    phi, nudged off the poles of the asymptotic split.

    phi = alpha mu zeroes the (phi - alpha mu) denominator; phi/alpha - mu a
    non-negative integer hits a pole of Gamma(mu - phi/alpha).

    Raises:
        DomainError: At a pole when perturb_poles is False
    """
    if not _is_pole(phi, alpha, mu):
        return phi
    message = (
        f"phi={phi:g} puts the asymptotic CDF on a pole (alpha={alpha:g}, mu={mu:g})"
    )
    if not perturb_poles:
        raise DomainError(message)
    perturbed = phi * (1.0 + settings.pole_perturbation)
    logger.warning(f"{message}; using phi={perturbed!r}")
    warnings.warn(f"{message}; phi perturbed by {settings.pole_perturbation:g} relative", PoleWarning)
    return perturbed


def asymptotic_terms(model: SnrModel, perturb_poles: bool = True) -> AsymptoticTerms:
    """
    R lam^{alpha mu / 2} + T lam^{phi/2} + C^m lam^m / Gamma(m + 1).

    R = phi mu^mu A^{alpha mu/2} / ((phi - alpha mu) Gamma(mu + 1))
    T = mu^{phi/alpha} Gamma(mu - phi/alpha) A^{phi/2} / Gamma(mu)
    """
    k = model.constants()
    alpha, mu, m = k.alpha, k.mu, k.m
    phi = pole_safe_phi(alpha, mu, k.phi, perturb_poles)
    r_coef = phi * mu ** mu * k.A ** (0.5 * alpha * mu) / ((phi - alpha * mu) * special.gamma(mu + 1.0))
    t_coef = mu ** (phi / alpha) * special.gamma(mu - phi / alpha) * k.A ** (0.5 * phi) / special.gamma(mu)
    c_coef = math.exp(m * math.log(k.C) - special.gammaln(m + 1.0))
    return AsymptoticTerms(
        r_coef=float(r_coef), r_exp=0.5 * alpha * mu,
        t_coef=float(t_coef), t_exp=0.5 * phi,
        c_coef=c_coef, c_exp=m,
    )


def snr_cdf_asymptotic(model: SnrModel, lam: ArrayLike, perturb_poles: bool = True) -> ArrayLike:
    """High-SNR CDF as the three-term power-law sum."""
    lam = _check_lam(lam, "snr_cdf_asymptotic")
    terms = asymptotic_terms(model, perturb_poles)
    out = sum(coef * lam ** exp for coef, exp in terms.pairs())
    return float(out) if np.ndim(out) == 0 else out


def diversity_order(model: SnrModel) -> float:
    """min(alpha mu / 2, phi / 2, m)"""
    return min(
        0.5 * model.thz_fading.alpha * model.thz_fading.mu,
        0.5 * model.pointing.phi,
        model.rf_fading.m,
    )
