"""
Quadrature Oracles - independent numerical ground truth.

Every closed form has a direct one-dimensional integral behind it. The
oracles integrate those with adaptive QUADPACK rules and use the
incomplete-gamma route for the Meijer-G kernel, so nothing here touches
Mellin-Barnes quadrature.

Half-line integrals are mapped to [0, 1) by lam = kappa u / (1 - u); an
algebraic factor lam^p goes into an endpoint-weighted rule.
"""

import logging
import math
from collections import defaultdict
from typing import Callable, NamedTuple, Optional, Union

from scipy import integrate, special

from thzrf.config import settings
from thzrf.errors import QuadratureError
from thzrf.schemas import (
    AlphaMuFading, HqamScheme, LinkConstants, NcfskScheme, PointingError, RqamScheme,
)
from thzrf.services.channel import alpha_mu_cdf
from thzrf.services.constellations import (
    conditional_ser, kernel_decay_rate, ser_derivative,
)
from thzrf.services.linkstats import CdfForm, SnrModel, meijer_kernel_gamma, snr_cdf_e2e, snr_pdf_e2e
from thzrf.services.specfun import kummer_damped

logger = logging.getLogger(__name__)

Scheme = Union[RqamScheme, HqamScheme, NcfskScheme]


class OracleResult(NamedTuple):
    value: float
    error: float


def _quad(fn: Callable[[float], float], a: float, b: float, label: str,
          epsabs: Optional[float], epsrel: Optional[float], **kwargs) -> OracleResult:
    epsabs = settings.oracle_epsabs if epsabs is None else epsabs
    epsrel = settings.oracle_epsrel if epsrel is None else epsrel
    result = integrate.quad(fn, a, b, epsabs=epsabs, epsrel=epsrel,
                            limit=settings.oracle_limit, full_output=1, **kwargs)
    value, error = float(result[0]), float(result[1])
    if len(result) > 3:
        message = str(result[3]).strip().splitlines()[0]
        if error > 1e-6 * abs(value) + 10 * epsabs:
            logger.error(f"{label}: {message} (value={value:.6e}, error={error:.2e})")
            raise QuadratureError(f"{label}: {message}", value=value, bound=error)
        logger.info(f"{label}: QUADPACK reported '{message}', error estimate {error:.2e} accepted")
    return OracleResult(value, error)


def half_line(fn: Callable[[float], float], power: float = 0.0, scale: float = 1.0,
              label: str = "integral", epsabs: Optional[float] = None,
              epsrel: Optional[float] = None) -> OracleResult:
    """
    int_0^inf lam^power fn(lam) dlam for power > -1.

    Args:
        fn: Smooth, decaying part of the integrand
        power: Algebraic exponent at the origin, handled by the weight
        scale: kappa of the map; put it near the decay length of fn
    """
    if not power > -1.0:
        raise QuadratureError(f"{label}: lam^{power} is not integrable at the origin")

    def mapped(u: float) -> float:
        if u <= 0.0 or u >= 1.0:
            return 0.0 if u >= 1.0 else float(fn(0.0)) * scale ** (power + 1.0)
        lam = scale * u / (1.0 - u)
        return float(fn(lam)) * scale ** (power + 1.0) * (1.0 - u) ** (-power - 2.0)

    kwargs = {}
    if power != 0.0:
        kwargs = {"weight": "alg", "wvar": (power, 0.0)}
    return _quad(mapped, 0.0, 1.0, label, epsabs, epsrel, **kwargs)


def _combine(parts) -> OracleResult:
    return OracleResult(sum(p.value for p in parts), sum(p.error for p in parts))


# ---------------------------------------------------------------------------
# ASER and MGF
# ---------------------------------------------------------------------------

def oracle_aser(model: SnrModel, scheme: Scheme, epsabs: Optional[float] = None,
                epsrel: Optional[float] = None) -> OracleResult:
    """
    -int P'(e|lam) F(lam) dlam with F from incomplete gammas.

    Kernel terms are grouped by their power of lam so each group gets its
    own endpoint weight.
    """
    kernel = ser_derivative(scheme)
    scale = 1.0 / kernel_decay_rate(kernel)

    def cdf(lam: float) -> float:
        return snr_cdf_e2e(model, lam, form=CdfForm.GAMMA) if lam > 0 else 0.0

    groups = defaultdict(list)
    for t in kernel.power_terms:
        groups[t.power].append(t)

    parts = []
    for power, terms in sorted(groups.items()):
        def smooth(lam: float, terms=terms) -> float:
            return -sum(t.coefficient * math.exp(-t.rate * lam) for t in terms) * cdf(lam)
        parts.append(half_line(smooth, power, scale, f"oracle {scheme.label} p={power:g}",
                               epsabs, epsrel))
    if kernel.kummer_terms:
        def kummer(lam: float) -> float:
            total = sum(t.coefficient * kummer_damped(t.damping, t.argument, lam)
                        for t in kernel.kummer_terms)
            return -total * cdf(lam)
        parts.append(half_line(kummer, 0.0, scale, f"oracle {scheme.label} kummer", epsabs, epsrel))
    return _combine(parts)


def oracle_aser_pdf(model: SnrModel, scheme: Scheme, epsabs: Optional[float] = None,
                    epsrel: Optional[float] = None) -> OracleResult:
    """int P(e|lam) f(lam) dlam with the end-to-end density (PDF approach)."""
    scale = 1.0 / kernel_decay_rate(ser_derivative(scheme))

    def integrand(lam: float) -> float:
        if lam <= 0.0:
            return 0.0
        return conditional_ser(scheme, lam) * snr_pdf_e2e(model, lam)

    return half_line(integrand, 0.0, scale, f"pdf oracle {scheme.label}", epsabs, epsrel)


def oracle_mgf(model: SnrModel, s: float, epsabs: Optional[float] = None,
               epsrel: Optional[float] = None) -> OracleResult:
    """s int e^{-s lam} F(lam) dlam"""
    def integrand(lam: float) -> float:
        if lam <= 0.0:
            return 0.0
        return s * math.exp(-s * lam) * snr_cdf_e2e(model, lam, form=CdfForm.GAMMA)

    return half_line(integrand, 0.0, 1.0 / s, f"mgf oracle s={s:g}", epsabs, epsrel)


# ---------------------------------------------------------------------------
# Integrals I1..I4
# ---------------------------------------------------------------------------

def _fading_tail(k: LinkConstants, lam: float) -> float:
    """G(mu (A lam)^{alpha/2}) Gamma(m, C lam)"""
    if lam <= 0.0:
        return k.alpha * special.gamma(k.mu) / k.phi * special.gamma(k.m)
    return meijer_kernel_gamma(k, lam) * special.gamma(k.m) * special.gammaincc(k.m, k.C * lam)


def oracle_i1(chi1: float, chi2: float) -> OracleResult:
    return half_line(lambda lam: math.exp(-chi2 * lam), chi1, 1.0 / chi2, "I1 oracle")


def oracle_i2(k: LinkConstants, chi1: float, chi2: float) -> OracleResult:
    def integrand(lam: float) -> float:
        return math.exp(-chi2 * lam) * _fading_tail(k, lam)
    return half_line(integrand, chi1, 1.0 / chi2, "I2 oracle")


def oracle_i3(chi1: float, chi2: float, chi3: float) -> OracleResult:
    return half_line(lambda lam: kummer_damped(chi2, chi3, lam), chi1,
                     1.0 / (chi2 - chi3), "I3 oracle")


def oracle_i4(k: LinkConstants, chi1: float, chi2: float) -> OracleResult:
    def integrand(lam: float) -> float:
        return kummer_damped(chi1, chi2, lam) * _fading_tail(k, lam)
    return half_line(integrand, 0.0, 1.0 / (chi1 - chi2), "I4 oracle")


# ---------------------------------------------------------------------------
# Channel
# ---------------------------------------------------------------------------

def oracle_composite_cdf(f: AlphaMuFading, p: PointingError, x: float) -> OracleResult:
    """int_0^{S0} F_alpha-mu(x / y) phi y^{phi-1} / S0^phi dy"""
    norm = p.phi / p.s0 ** p.phi

    def integrand(y: float) -> float:
        if y <= 0.0:
            return norm
        return alpha_mu_cdf(f, x / y) * norm

    return _quad(integrand, 0.0, p.s0, "composite CDF oracle", None, None,
                 weight="alg", wvar=(p.phi - 1.0, 0.0))
