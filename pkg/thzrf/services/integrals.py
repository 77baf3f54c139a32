"""
Closed-form integrals I1..I4 behind every ASER expression.

With G(lam) = G^{3,0}_{2,3}[mu (A lam)^{alpha/2} | 1, phi/alpha + 1; mu, 0, phi/alpha]:

    I1(x1, x2)     = int lam^x1 e^{-x2 lam} dlam
    I2(x1, x2)     = int lam^x1 e^{-x2 lam} G(lam) Gamma(m, C lam) dlam
    I3(x1, x2, x3) = int lam^x1 e^{-x2 lam} 1F1(1; 3/2; x3 lam) dlam
    I4(x1, x2)     = int e^{-x1 lam} 1F1(1; 3/2; x2 lam) G(lam) Gamma(m, C lam) dlam

I2 is a bivariate and I4 a trivariate Fox-H function; the FoxHSpec builders
below fix their parameter groups.
"""

import logging
import math
from typing import Optional

from scipy import special

from thzrf.errors import DomainError
from thzrf.schemas import ContourConfig, FoxHSpec, InnerParams, LinkConstants, OuterParam
from thzrf.services.mellin_barnes import fox_h_bivariate, fox_h_trivariate
from thzrf.services.specfun import hyp2f1

logger = logging.getLogger(__name__)


def meijer_axis(k: LinkConstants) -> InnerParams:
    """Gamma(mu+s) Gamma(s) Gamma(r+s) / (Gamma(1+s) Gamma(r+1+s)), r = phi/alpha."""
    ratio = k.phi / k.alpha
    return InnerParams(
        d=((k.mu, 1.0), (0.0, 1.0), (ratio, 1.0)),
        m=3,
        c=((1.0, 1.0), (ratio + 1.0, 1.0)),
        n=0,
    )


def gamma_axis(k: LinkConstants) -> InnerParams:
    """Gamma(m+t) Gamma(t) / Gamma(1+t), the Mellin-Barnes form of Gamma(m, .)."""
    return InnerParams(d=((k.m, 1.0), (0.0, 1.0)), m=2, c=((1.0, 1.0),), n=0)


def kummer_axis() -> InnerParams:
    """Gamma(r) Gamma(1/2 - r) / Gamma(3/2 - r), the Mellin-Barnes form of 1F1(1/2; 3/2; -.)."""
    return InnerParams(d=((0.0, 1.0), (-0.5, 1.0)), m=1, c=((0.5, 1.0),), n=1)


def i2_spec(k: LinkConstants, chi1: float, chi2: float,
            contour: Optional[ContourConfig] = None) -> FoxHSpec:
    """
    Bivariate Fox-H with I2(chi1, chi2) = chi2^{-(chi1+1)} H[spec].

    Variables are mu (A/chi2)^{alpha/2} and C/chi2; the coupling factor is
    Gamma(1 + chi1 - (alpha/2) s - t).
    """
    if not chi1 > -1.0:
        raise DomainError(f"I2 needs chi1 > -1, got {chi1}")
    if not chi2 > 0.0:
        raise DomainError(f"I2 needs chi2 > 0, got {chi2}")
    return FoxHSpec(
        variables=(k.mu * (k.A / chi2) ** (0.5 * k.alpha), k.C / chi2),
        outer_params=(OuterParam(coefficient=-chi1, weights=(0.5 * k.alpha, 1.0)),),
        inner_params=(meijer_axis(k), gamma_axis(k)),
        contour=contour or ContourConfig(),
    )


def i4_spec(k: LinkConstants, chi1: float, chi2: float,
            contour: Optional[ContourConfig] = None) -> FoxHSpec:
    """
    Trivariate Fox-H with I4(chi1, chi2) = H[spec] / (2 (chi1 - chi2)).

    Kummer's transformation turns e^{-chi1 lam} 1F1(1; 3/2; chi2 lam) into
    e^{-(chi1 - chi2) lam} 1F1(1/2; 3/2; -chi2 lam), whose Mellin-Barnes
    integral supplies the third contour.
    """
    if not chi2 > 0.0:
        raise DomainError(f"I4 Fox-H form needs chi2 > 0, got {chi2}")
    if not chi1 > chi2:
        raise DomainError(f"I4 needs chi1 > chi2, got chi1={chi1}, chi2={chi2}")
    gap = chi1 - chi2
    return FoxHSpec(
        variables=(chi2 / gap, k.mu * (k.A / gap) ** (0.5 * k.alpha), k.C / gap),
        outer_params=(OuterParam(coefficient=0.0, weights=(1.0, 0.5 * k.alpha, 1.0)),),
        inner_params=(kummer_axis(), meijer_axis(k), gamma_axis(k)),
        contour=contour or ContourConfig(),
    )


def integral_i1(chi1: float, chi2: float) -> float:
    """I1 = Gamma(chi1 + 1) / chi2^{chi1 + 1}."""
    if not chi1 > -1.0 or not chi2 > 0.0:
        raise DomainError(f"I1 needs chi1 > -1 and chi2 > 0, got ({chi1}, {chi2})")
    return math.exp(special.gammaln(chi1 + 1.0) - (chi1 + 1.0) * math.log(chi2))


def integral_i2(k: LinkConstants, chi1: float, chi2: float,
                contour: Optional[ContourConfig] = None) -> float:
    spec = i2_spec(k, chi1, chi2, contour)
    return chi2 ** (-(chi1 + 1.0)) * fox_h_bivariate(spec)


def integral_i3(chi1: float, chi2: float, chi3: float) -> float:
    """
    I3 = Gamma(chi1 + 1) / chi2^{chi1+1} 2F1(1, chi1 + 1; 3/2; chi3 / chi2).

    Raises:
        DomainError: Unless chi1 > -1 and 0 <= chi3 < chi2
    """
    if not chi1 > -1.0:
        raise DomainError(f"I3 needs chi1 > -1, got {chi1}")
    if not 0.0 <= chi3 < chi2:
        raise DomainError(f"I3 needs 0 <= chi3 < chi2, got chi2={chi2}, chi3={chi3}")
    return integral_i1(chi1, chi2) * hyp2f1(1.0, chi1 + 1.0, 1.5, chi3 / chi2)


def integral_i4(k: LinkConstants, chi1: float, chi2: float,
                contour: Optional[ContourConfig] = None) -> float:
    """I4 through the trivariate Fox-H; chi2 = 0 collapses to I2(0, chi1)."""
    if chi2 == 0.0:
        return integral_i2(k, 0.0, chi1, contour)
    spec = i4_spec(k, chi1, chi2, contour)
    return fox_h_trivariate(spec) / (2.0 * (chi1 - chi2))
