"""
ASER Service - closed-form average symbol error rates.

The CDF approach gives ASER = -int P'(e|lam) F(lam) dlam. Writing
F = 1 - B G(.) Gamma(m, C lam) and expanding P' into its kernel terms turns
every scheme into a finite sum of the integrals I1..I4:

    ASER = -sum c I1 - sum g I3 + B sum c I2 + B sum g I4

aser_rqam and aser_hqam assemble the same sums through the Psi functions
(one bivariate Fox-H per power term, one trivariate per Kummer term);
aser_from_kernel is the generic path and doubles as a cross-check.

Noncoherent FSK goes through the MGF instead. The asymptotic forms replace
F by its three-term power-law expansion.
"""

import logging
import math
from typing import Optional, Union

from thzrf.errors import AccuracyError, DomainError
from thzrf.schemas import (
    ContourConfig, HqamScheme, LinkConstants, NcfskScheme, RqamScheme, SerDerivative, sqam,
)
from thzrf.services.constellations import ncfsk_weights, ser_derivative
from thzrf.services.integrals import (
    i2_spec, i4_spec, integral_i1, integral_i2, integral_i3, integral_i4,
)
from thzrf.services.linkstats import SnrModel, asymptotic_terms, mgf_e2e
from thzrf.services.mellin_barnes import fox_h_bivariate, fox_h_trivariate
from thzrf.services.specfun import hyp2f1_11_32

logger = logging.getLogger(__name__)

Scheme = Union[RqamScheme, HqamScheme, NcfskScheme]

_SQRT_PI = math.sqrt(math.pi)


def _check_range(value: float, label: str) -> float:
    if not 0.0 <= value <= 1.0:
        logger.error(f"{label}: ASER {value!r} outside [0, 1]")
        raise AccuracyError(f"{label}: ASER {value!r} outside [0, 1]", value=value)
    return value


# ---------------------------------------------------------------------------
# Psi functions
# ---------------------------------------------------------------------------

def psi_1(k: LinkConstants, chi: float, contour: Optional[ContourConfig] = None) -> float:
    """(chi/2)^{1/2} I2(-1/2, chi/2) = H[mu (2A/chi)^{alpha/2}, 2C/chi]."""
    return fox_h_bivariate(i2_spec(k, -0.5, 0.5 * chi, contour))


def psi_2(k: LinkConstants, x: float, y: float, contour: Optional[ContourConfig] = None) -> float:
    """I4((x + y)/2, x/2) = (1/y) H[x/y, mu (2A/y)^{alpha/2}, 2C/y]."""
    return fox_h_trivariate(i4_spec(k, 0.5 * (x + y), 0.5 * x, contour)) / y


def psi_3(k: LinkConstants, chi: float, alpha_h: float,
          contour: Optional[ContourConfig] = None) -> float:
    """(alpha_h/chi)^{1/2} I2(-1/2, alpha_h/chi) = H[mu (A chi/alpha_h)^{alpha/2}, C chi/alpha_h]."""
    return fox_h_bivariate(i2_spec(k, -0.5, alpha_h / chi, contour))


def psi_4(k: LinkConstants, x: float, y: float, alpha_h: float,
          contour: Optional[ContourConfig] = None) -> float:
    """
    H[x, mu (A y/alpha_h)^{alpha/2}, C y/alpha_h].

    Equal to (2 alpha_h / y) I4(delta, gamma) for gamma/(delta - gamma) = x
    and alpha_h/(delta - gamma) = y.
    """
    gap = alpha_h / y
    return fox_h_trivariate(i4_spec(k, gap * (1.0 + x), gap * x, contour))


def psi_inf(chi1: float, chi2: float) -> float:
    """(chi2/2)^{-(chi1+1)/2} Gamma((chi1+1)/2)"""
    half = 0.5 * (chi1 + 1.0)
    return math.exp(math.lgamma(half) - half * math.log(0.5 * chi2))


# ---------------------------------------------------------------------------
# Exact ASER
# ---------------------------------------------------------------------------

def rqam_constant(s: RqamScheme) -> float:
    """ASER of the no-signal channel: p + q - 2pq plus the 2F1 pair."""
    value = s.p + s.q - 2.0 * s.p * s.q
    if s.b > 0:
        total = s.a ** 2 + s.b ** 2
        value += 2.0 * s.coef_g / (_SQRT_PI * total) * (
            hyp2f1_11_32(s.a ** 2 / total) + hyp2f1_11_32(s.b ** 2 / total)
        )
    return value


def aser_rqam(model: SnrModel, s: RqamScheme, contour: Optional[ContourConfig] = None) -> float:
    """
    Closed-form RQAM ASER from Psi_1 (bivariate) and Psi_2 (trivariate) terms.

    BPSK (b = 0) keeps only the in-phase Psi_1 term.

    Raises:
        AccuracyError: If the assembled value leaves [0, 1]
    """
    k = model.constants()
    a2, b2 = s.a ** 2, s.b ** 2
    value = rqam_constant(s)
    value += k.B / _SQRT_PI * s.p * (s.q - 1.0) * psi_1(k, a2, contour)
    if s.b > 0:
        value += k.B / _SQRT_PI * s.q * (s.p - 1.0) * psi_1(k, b2, contour)
        value -= k.B * s.coef_g / _SQRT_PI * (
            psi_2(k, a2, b2, contour) + psi_2(k, b2, a2, contour)
        )
    logger.debug(f"{s.label} @ {model.power.snr_db:g} dB: {value:.12g}")
    return _check_range(value, s.label)


def aser_sqam(model: SnrModel, m: int, contour: Optional[ContourConfig] = None) -> float:
    """Square QAM as RQAM with sqrt(M) levels per rail."""
    try:
        scheme = sqam(m)
    except ValueError as e:
        raise DomainError(str(e)) from e
    return aser_rqam(model, scheme, contour)


def hqam_constant(s: HqamScheme) -> float:
    return 0.5 * s.b_param - s.bc_param / 3.0


def aser_hqam(model: SnrModel, s: HqamScheme, contour: Optional[ContourConfig] = None) -> float:
    """Closed-form HQAM ASER from Psi_3 (bivariate) and Psi_4 (trivariate) terms."""
    k = model.constants()
    a, b, bc = s.alpha_h, s.b_param, s.bc_param
    pi = math.pi
    value = hqam_constant(s)
    value += k.B / _SQRT_PI * (
        0.5 * (bc - b) * psi_3(k, 2.0, a, contour)
        - bc / 3.0 * psi_3(k, 3.0, a, contour)
        + 0.5 * bc * psi_3(k, 6.0, a, contour)
    )
    value += k.B * bc / pi * (
        psi_4(k, 1.0, 3.0, a, contour) / 3.0
        - 0.5 * math.sqrt(3.0) * psi_4(k, 3.0, 6.0, a, contour)
        - psi_4(k, 1.0 / 3.0, 2.0, a, contour) / (2.0 * math.sqrt(3.0))
    )
    logger.debug(f"{s.label} @ {model.power.snr_db:g} dB: {value:.12g}")
    return _check_range(value, s.label)


def aser_ncfsk(model: SnrModel, s: NcfskScheme, contour: Optional[ContourConfig] = None) -> float:
    """sum_eta (-1)^{eta+1}/(eta+1) C(M-1, eta) M(eta/(eta+1))"""
    value = sum(w * mgf_e2e(model, r, contour) for w, r in ncfsk_weights(s.m))
    return _check_range(value, s.label)


def aber_bfsk(model: SnrModel, contour: Optional[ContourConfig] = None) -> float:
    """Binary NCFSK: 1/2 - (B/2) H[mu (2A)^{alpha/2}, 2C]."""
    k = model.constants()
    value = 0.5 - 0.5 * k.B * fox_h_bivariate(i2_spec(k, 0.0, 0.5, contour))
    return _check_range(value, "2-ncfsk")


def aser_from_kernel(model: SnrModel, kernel: SerDerivative,
                     contour: Optional[ContourConfig] = None) -> float:
    """
    ASER of any scheme whose SER derivative is a kernel-term sum.

    Terms with zero coefficient are skipped.
    """
    k = model.constants()
    value = 0.0
    for t in kernel.power_terms:
        if t.coefficient == 0.0:
            continue
        value -= t.coefficient * integral_i1(t.power, t.rate)
        value += k.B * t.coefficient * integral_i2(k, t.power, t.rate, contour)
    for t in kernel.kummer_terms:
        if t.coefficient == 0.0:
            continue
        value -= t.coefficient * integral_i3(0.0, t.damping, t.argument)
        value += k.B * t.coefficient * integral_i4(k, t.damping, t.argument, contour)
    return _check_range(value, "kernel")


def aser(model: SnrModel, scheme: Scheme, contour: Optional[ContourConfig] = None) -> float:
    """Dispatch to the closed form of the scheme."""
    if isinstance(scheme, RqamScheme):
        return aser_rqam(model, scheme, contour)
    if isinstance(scheme, HqamScheme):
        return aser_hqam(model, scheme, contour)
    if isinstance(scheme, NcfskScheme):
        return aser_ncfsk(model, scheme, contour)
    raise DomainError(f"unsupported scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Asymptotic ASER
# ---------------------------------------------------------------------------

def aser_asymptotic(model: SnrModel, scheme: Scheme, perturb_poles: bool = True) -> float:
    """
    High-SNR ASER: sum over F ~ K lam^nu of
    K [-sum c I1(nu + power, rate) - sum g I3(nu, damping, argument)].
    """
    kernel = ser_derivative(scheme)
    value = 0.0
    for coef, nu in asymptotic_terms(model, perturb_poles).pairs():
        inner = 0.0
        for t in kernel.power_terms:
            inner -= t.coefficient * integral_i1(nu + t.power, t.rate)
        for t in kernel.kummer_terms:
            inner -= t.coefficient * integral_i3(nu, t.damping, t.argument)
        value += coef * inner
    return value


def aser_rqam_asymptotic(model: SnrModel, s: RqamScheme, perturb_poles: bool = True) -> float:
    """
    High-SNR RQAM ASER written with Psi_inf.

    int lam^{nu - 1/2} e^{-a^2 lam / 2} dlam = Psi_inf(2 nu, a^2); the Kummer
    pair keeps its own 2F1(1, nu + 1; 3/2; .) per term.
    """
    a2, b2 = s.a ** 2, s.b ** 2
    value = 0.0
    for coef, nu in asymptotic_terms(model, perturb_poles).pairs():
        inner = -s.coef_d * psi_inf(2.0 * nu, a2)
        if s.b > 0:
            inner -= s.coef_f * psi_inf(2.0 * nu, b2)
            damping = 0.5 * (a2 + b2)
            inner += s.coef_g / _SQRT_PI * (
                integral_i3(nu, damping, 0.5 * a2) + integral_i3(nu, damping, 0.5 * b2)
            )
        value += coef * inner
    return value


def aser_hqam_asymptotic(model: SnrModel, s: HqamScheme, perturb_poles: bool = True) -> float:
    return aser_asymptotic(model, s, perturb_poles)
