"""
Constellations Service - geometry and conditional symbol error rates.

Provides, per modulation scheme:
- the unit-energy point set used by symbol-level simulation
- the conditional SER P(e | lam) at instantaneous SNR lam
- its first derivative as power-exp and damped-Kummer kernel terms

HQAM analytical parameters (B, B_c, alpha_h) are read off the bundled
lattice geometry: B is the mean nearest-neighbour count, B_c three times
the number of nearest-neighbour triangles per point, alpha_h = d_min^2 / 2.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np
from scipy import special

from thzrf.errors import DomainError
from thzrf.schemas import (
    HQAM_ORDERS, HqamScheme, KummerTerm, NcfskScheme, PowerExpTerm, RqamScheme,
    SerDerivative,
)
from thzrf.services.specfun import kummer_damped, qfunc

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

# relative slack when grouping equal distances
_DISTANCE_TOL = 1e-9

Scheme = Union[RqamScheme, HqamScheme, NcfskScheme]


@dataclass(frozen=True)
class Constellation:
    """
    Unit-energy symbol alphabet.

    QAM alphabets hold complex points of shape (M,); an orthogonal (FSK)
    alphabet holds the M x M identity, one basis vector per symbol.
    """
    points: np.ndarray
    label_count: int
    orthogonal: bool = False

    def __post_init__(self):
        if len(self.points) != self.label_count:
            raise ValueError(f"{len(self.points)} points for {self.label_count} labels")
        energy = float(np.mean(np.sum(np.abs(self.points.reshape(self.label_count, -1)) ** 2, axis=1)))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"average symbol energy is {energy!r}, expected 1")

    @property
    def min_distance(self) -> float:
        return min_distance(self.points)


class HqamParameters(NamedTuple):
    b_param: float
    bc_param: float
    alpha_h: float
    min_distance: float


def _normalize(points: np.ndarray) -> np.ndarray:
    return points / math.sqrt(float(np.mean(np.abs(points) ** 2)))


def min_distance(points: np.ndarray) -> float:
    diffs = np.abs(points[:, None] - points[None, :])
    np.fill_diagonal(diffs, np.inf)
    return float(diffs.min())


def load_point_file(path: Path) -> np.ndarray:
    """
    Read a "re im" point list; '#' starts a comment.

    Raises:
        DomainError: On a malformed line or an empty file
    """
    points = []
    with open(path) as fh:
        for number, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2:
                raise DomainError(f"{path}:{number}: expected 're im', got {raw.strip()!r}")
            try:
                points.append(complex(float(fields[0]), float(fields[1])))
            except ValueError as e:
                raise DomainError(f"{path}:{number}: {e}") from e
    if not points:
        raise DomainError(f"{path}: no points")
    return np.array(points)


@lru_cache(maxsize=None)
def hqam_points(order: int) -> np.ndarray:
    """Bundled HQAM point set, rescaled to unit average energy."""
    if order not in HQAM_ORDERS:
        raise DomainError(f"no bundled HQAM geometry for M={order}; available: {HQAM_ORDERS}")
    raw = load_point_file(DATA_DIR / f"hqam_{order}.txt")
    if len(raw) != order:
        raise DomainError(f"hqam_{order}.txt holds {len(raw)} points")
    points = _normalize(raw)
    points.setflags(write=False)
    return points


@lru_cache(maxsize=None)
def hqam_parameters(order: int) -> HqamParameters:
    """B, B_c and alpha_h of the bundled M-point HQAM set."""
    points = hqam_points(order)
    d_min = min_distance(points)
    adjacent = np.abs(points[:, None] - points[None, :]) <= d_min * (1.0 + _DISTANCE_TOL)
    np.fill_diagonal(adjacent, False)
    pairs = int(adjacent.sum()) // 2
    triangles = sum(
        1 for i, j, k in itertools.combinations(range(order), 3)
        if adjacent[i, j] and adjacent[j, k] and adjacent[i, k]
    )
    params = HqamParameters(
        b_param=2.0 * pairs / order,
        bc_param=3.0 * triangles / order,
        alpha_h=0.5 * d_min ** 2,
        min_distance=d_min,
    )
    logger.debug(f"{order}-HQAM: {pairs} neighbour pairs, {triangles} triangles -> {params}")
    return params


def build_constellation(scheme: Scheme) -> Constellation:
    """Unit-energy alphabet of an RQAM, HQAM or NCFSK scheme."""
    if isinstance(scheme, RqamScheme):
        # levels at odd multiples of d_I (in-phase) and beta d_I (quadrature)
        i_levels = np.arange(-(scheme.m_i - 1), scheme.m_i, 2, dtype=float)
        q_levels = scheme.beta * np.arange(-(scheme.m_q - 1), scheme.m_q, 2, dtype=float)
        grid = (i_levels[:, None] + 1j * q_levels[None, :]).ravel()
        return Constellation(points=_normalize(grid), label_count=scheme.order)
    if isinstance(scheme, HqamScheme):
        return Constellation(points=np.array(hqam_points(scheme.m)), label_count=scheme.m)
    if isinstance(scheme, NcfskScheme):
        return Constellation(points=np.eye(scheme.m, dtype=complex), label_count=scheme.m,
                             orthogonal=True)
    raise DomainError(f"unsupported scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Conditional SER and its derivative
# ---------------------------------------------------------------------------

def ncfsk_weights(m: int):
    """(weight, exponent) pairs of P(e|lam) = sum w e^{-r lam}, r = eta/(eta+1)."""
    return [
        ((-1) ** (eta + 1) / (eta + 1) * special.comb(m - 1, eta, exact=True), eta / (eta + 1))
        for eta in range(1, m)
    ]


def conditional_ser(scheme: Scheme, lam) -> Union[float, np.ndarray]:
    """
    Symbol error probability at instantaneous SNR lam.

    RQAM:  2p Q(a sqrt lam) + 2q Q(b sqrt lam) - 4pq Q(a sqrt lam) Q(b sqrt lam)
    HQAM:  B Q(sqrt(alpha_h lam)) + (2/3) B_c Q^2(sqrt(2 alpha_h lam / 3))
           - 2 B_c Q(sqrt(alpha_h lam)) Q(sqrt(alpha_h lam / 3))
    NCFSK: sum_eta (-1)^{eta+1} / (eta+1) C(M-1, eta) e^{-eta lam / (eta+1)}
    """
    lam = np.asarray(lam, dtype=float)
    root = np.sqrt(lam)
    if isinstance(scheme, RqamScheme):
        qa = qfunc(scheme.a * root)
        qb = qfunc(scheme.b * root)
        out = 2 * scheme.p * qa + 2 * scheme.q * qb - 4 * scheme.p * scheme.q * qa * qb
    elif isinstance(scheme, HqamScheme):
        a = scheme.alpha_h
        q1 = qfunc(np.sqrt(a * lam))
        q2 = qfunc(np.sqrt(2.0 * a * lam / 3.0))
        q3 = qfunc(np.sqrt(a * lam / 3.0))
        out = scheme.b_param * q1 + (2.0 / 3.0) * scheme.bc_param * q2 * q2 - 2.0 * scheme.bc_param * q1 * q3
    elif isinstance(scheme, NcfskScheme):
        out = sum(w * np.exp(-r * lam) for w, r in ncfsk_weights(scheme.m))
    else:
        raise DomainError(f"unsupported scheme {scheme!r}")
    return float(out) if np.ndim(out) == 0 else out


def _rqam_derivative(s: RqamScheme) -> SerDerivative:
    power = [PowerExpTerm(coefficient=s.coef_d, rate=0.5 * s.a ** 2)]
    kummer = []
    if s.b > 0:
        power.append(PowerExpTerm(coefficient=s.coef_f, rate=0.5 * s.b ** 2))
        g = -s.coef_g / math.sqrt(math.pi)
        damping = 0.5 * (s.a ** 2 + s.b ** 2)
        kummer = [
            KummerTerm(coefficient=g, damping=damping, argument=0.5 * s.a ** 2),
            KummerTerm(coefficient=g, damping=damping, argument=0.5 * s.b ** 2),
        ]
    return SerDerivative(power_terms=tuple(power), kummer_terms=tuple(kummer))


def _hqam_derivative(s: HqamScheme) -> SerDerivative:
    a, b, bc = s.alpha_h, s.b_param, s.bc_param
    pi = math.pi
    power = (
        PowerExpTerm(coefficient=math.sqrt(a / (2 * pi)) * (bc - b) / 2.0, rate=a / 2.0),
        PowerExpTerm(coefficient=-math.sqrt(a / (3 * pi)) * bc / 3.0, rate=a / 3.0),
        PowerExpTerm(coefficient=math.sqrt(a / (6 * pi)) * bc / 2.0, rate=a / 6.0),
    )
    cross = -bc * a / (2.0 * math.sqrt(3.0) * pi)
    kummer = (
        KummerTerm(coefficient=2.0 * bc * a / (9.0 * pi), damping=2.0 * a / 3.0, argument=a / 3.0),
        KummerTerm(coefficient=cross, damping=2.0 * a / 3.0, argument=a / 2.0),
        KummerTerm(coefficient=cross, damping=2.0 * a / 3.0, argument=a / 6.0),
    )
    return SerDerivative(power_terms=power, kummer_terms=kummer)


def _ncfsk_derivative(s: NcfskScheme) -> SerDerivative:
    return SerDerivative(power_terms=tuple(
        PowerExpTerm(coefficient=-w * r, power=0.0, rate=r) for w, r in ncfsk_weights(s.m)
    ))


def ser_derivative(scheme: Scheme) -> SerDerivative:
    """dP(e|lam)/dlam as kernel terms."""
    if isinstance(scheme, RqamScheme):
        return _rqam_derivative(scheme)
    if isinstance(scheme, HqamScheme):
        return _hqam_derivative(scheme)
    if isinstance(scheme, NcfskScheme):
        return _ncfsk_derivative(scheme)
    raise DomainError(f"unsupported scheme {scheme!r}")


def evaluate_derivative(kernel: SerDerivative, lam) -> Union[float, np.ndarray]:
    """Sum the kernel terms at lam > 0."""
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(lam.shape)
    for term in kernel.power_terms:
        out = out + term.coefficient * lam ** term.power * np.exp(-term.rate * lam)
    for term in kernel.kummer_terms:
        out = out + term.coefficient * kummer_damped(term.damping, term.argument, lam)
    return float(out) if out.ndim == 0 else out


def kernel_decay_rate(kernel: SerDerivative) -> float:
    """Slowest exponential decay rate among the terms."""
    rates = [t.rate for t in kernel.power_terms]
    rates += [t.damping - t.argument for t in kernel.kummer_terms]
    return min(rates)
