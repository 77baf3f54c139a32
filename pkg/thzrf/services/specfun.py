"""
Special functions used by the closed forms.

Thin, domain-checked wrappers over scipy.special plus the few helpers scipy
does not provide directly: the upper incomplete gamma for non-positive
first argument and an overflow-safe damped 1F1(1; 3/2; .).

Meijer-G and Fox-H live in services.mellin_barnes.
"""

import logging
import math
from typing import Union

import numpy as np
from scipy import special

from thzrf.config import settings
from thzrf.errors import DomainError, SeriesConvergenceError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _scalar_or_array(values: np.ndarray) -> ArrayLike:
    return float(values) if np.ndim(values) == 0 else values


def gamma_upper(a: float, x: ArrayLike) -> ArrayLike:
    """
    Upper incomplete gamma function Gamma(a, x).

    Args:
        a: Shape, must be positive
        x: Lower integration limit(s), non-negative

    Returns:
        Gamma(a, x), a float for scalar x

    Raises:
        DomainError: If a <= 0 or any x < 0
    """
    if not a > 0:
        raise DomainError(f"gamma_upper needs a > 0, got a={a}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("gamma_upper needs x >= 0")
    return _scalar_or_array(special.gamma(a) * special.gammaincc(a, x))


def gamma_upper_regularized(a: float, x: ArrayLike) -> ArrayLike:
    """Q(a, x) = Gamma(a, x) / Gamma(a)."""
    if not a > 0:
        raise DomainError(f"regularized upper gamma needs a > 0, got a={a}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("regularized upper gamma needs x >= 0")
    return _scalar_or_array(special.gammaincc(a, x))


def gamma_upper_extended(a: float, x: ArrayLike) -> ArrayLike:
    """
    Gamma(a, x) for any real a and x > 0.

    Non-positive a is reached from a positive (or zero) shape with the
    downward recurrence Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a;
    Gamma(0, x) is the exponential integral E1(x).
    """
    if a > 0:
        return gamma_upper(a, x)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError(f"Gamma({a}, x) diverges at x <= 0")
    steps = int(math.ceil(-a))
    start = a + steps
    if start == 0:
        value = special.exp1(x)
    else:
        value = special.gamma(start) * special.gammaincc(start, x)
    shape = start
    for _ in range(steps):
        shape -= 1.0
        value = (value - x ** shape * np.exp(-x)) / shape
    return _scalar_or_array(value)


def hyp1f1_series(a: float, b: float, z: float, max_terms: int = None,
                  stagnation: float = None) -> float:
    """
    Term-by-term Kummer series sum_k (a)_k / (b)_k z^k / k!.

    Stops when a term no longer changes the sum relative to ``stagnation``.

    Raises:
        SeriesConvergenceError: If the cap is hit first; carries the partial
            sum and the size of the last term as bound
    """
    max_terms = max_terms or settings.series_max_terms
    stagnation = stagnation if stagnation is not None else settings.series_stagnation
    term, total = 1.0, 1.0
    for k in range(max_terms):
        term *= (a + k) / (b + k) * z / (k + 1)
        total += term
        if abs(term) <= stagnation * abs(total):
            return total
    raise SeriesConvergenceError(
        f"1F1({a}; {b}; {z}) series did not settle in {max_terms} terms",
        value=total, bound=abs(term),
    )


def hyp1f1(a: float, b: float, z: ArrayLike) -> ArrayLike:
    """
    Confluent hypergeometric function 1F1(a; b; z).

    Raises:
        DomainError: If b is a non-positive integer
        SeriesConvergenceError: If scipy returns a non-finite value and the
            fallback series does not converge either
    """
    if b <= 0 and float(b).is_integer():
        raise DomainError(f"1F1 undefined for b={b}")
    values = np.asarray(special.hyp1f1(a, b, z), dtype=float)
    if np.all(np.isfinite(values)):
        return _scalar_or_array(values)
    logger.warning(f"scipy 1F1({a}; {b}; .) not finite, summing the series")
    flat = np.atleast_1d(np.asarray(z, dtype=float)).ravel()
    out = np.array([hyp1f1_series(a, b, float(zi)) for zi in flat]).reshape(np.shape(z))
    return _scalar_or_array(out)


def kummer_damped(delta: float, gamma: float, lam: ArrayLike) -> ArrayLike:
    """
    e^{-delta lam} 1F1(1; 3/2; gamma lam) without intermediate overflow.

    Uses 1F1(1; 3/2; y) = sqrt(pi) e^y erf(sqrt(y)) / (2 sqrt(y)) for y > 0.
    """
    if gamma < 0:
        raise DomainError(f"kummer_damped needs gamma >= 0, got {gamma}")
    lam = np.asarray(lam, dtype=float)
    y = gamma * lam
    root = np.sqrt(y)
    small = root <= 1e-4
    safe = np.where(small, 1.0, root)
    large = np.exp((gamma - delta) * lam) * 0.5 * math.sqrt(math.pi) * special.erf(safe) / safe
    # leading Kummer terms near the origin
    series = np.exp(-delta * lam) * (1.0 + 2.0 * y / 3.0 + 4.0 * y * y / 15.0)
    return _scalar_or_array(np.where(small, series, large))


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function on 0 <= z < 1."""
    if not 0.0 <= z < 1.0:
        raise DomainError(f"2F1 series only used on [0, 1), got z={z}")
    value = float(special.hyp2f1(a, b, c, z))
    if not math.isfinite(value):
        raise SeriesConvergenceError(f"2F1({a}, {b}; {c}; {z}) not finite", value=value)
    return value


def hyp2f1_11_32(z: float) -> float:
    """2F1(1, 1; 3/2; z) for 0 <= z < 1."""
    return hyp2f1(1.0, 1.0, 1.5, z)


def qfunc(x: ArrayLike) -> ArrayLike:
    """Gaussian tail probability Q(x) = erfc(x / sqrt 2) / 2."""
    return _scalar_or_array(0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0)))
