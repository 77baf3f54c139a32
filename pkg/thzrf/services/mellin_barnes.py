"""
Mellin-Barnes Quadrature - Meijer-G and multivariate Fox-H evaluation.

Both functions are contour integrals of Gamma-function ratios times z^{-s}.
They are evaluated with the trapezoidal rule on truncated vertical
(Bromwich) lines:

- Gamma factors are taken as exp(loggamma) of complex arguments
- Each line sits strictly between its left and right pole families
- The truncation T is found by scanning the integrand magnitude
- Refinement halves the step until two estimates agree

For the multivariate case with a single coupling factor
Gamma(1 - a - sum w_i s_i), the per-axis steps are chosen so that every
w_i * h_i equals one lattice step. The tensor-grid trapezoid sum then
collapses to a convolution of per-axis arrays followed by one Gamma
evaluation per lattice point, which gives the same sum at a fraction of
the cost.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, special

from thzrf.config import settings
from thzrf.errors import AccuracyError, ContourError, ConvergenceError, EvaluationError, NodeBudgetError
from thzrf.schemas import (
    ContourConfig, FoxHSpec, InnerParams, MeijerGSpec, OuterParam, Refinement,
)

logger = logging.getLogger(__name__)

# Discretisation error of the initial step is about exp(-_DIGITS)
_DIGITS = 40.0
_EDGE_MARGIN = 0.25
_SADDLE_SPAN = 60.0
_TRUNCATION_SAFETY = 1.25


@dataclass(frozen=True)
class _Estimate:
    value: complex
    scale: float


def _clean(log_values: np.ndarray) -> np.ndarray:
    # a denominator pole gives -inf (factor 0); NaN only arises the same way
    return np.where(np.isnan(log_values), -np.inf + 0j, log_values)


def _inner_log(params: InnerParams, s: np.ndarray) -> np.ndarray:
    """log of the per-variable Gamma ratio at complex points s."""
    out = np.zeros(np.shape(s), dtype=complex)
    with np.errstate(all="ignore"):
        for j, (d, w) in enumerate(params.d):
            if j < params.m:
                out += special.loggamma(d + w * s)
            else:
                out -= special.loggamma(1.0 - d - w * s)
        for j, (c, w) in enumerate(params.c):
            if j < params.n:
                out += special.loggamma(1.0 - c - w * s)
            else:
                out -= special.loggamma(c + w * s)
    return _clean(out)


def _axis_log(params: InnerParams, log_z: float, s: np.ndarray) -> np.ndarray:
    return _inner_log(params, s) - s * log_z


def _outer_log(outer: OuterParam, s_list: Sequence[np.ndarray]) -> np.ndarray:
    arg = 1.0 - outer.coefficient
    for w, s in zip(outer.weights, s_list):
        arg = arg - w * s
    with np.errstate(all="ignore"):
        return _clean(special.loggamma(arg))


def _outer_slack(outer: OuterParam, offsets: Sequence[float]) -> float:
    return 1.0 - outer.coefficient - sum(w * c for w, c in zip(outer.weights, offsets))


def _check_offsets(inner: Sequence[InnerParams], outers: Sequence[OuterParam],
                   offsets: Sequence[float]) -> None:
    for i, (params, c) in enumerate(zip(inner, offsets)):
        if not params.left_pole < c < params.right_pole:
            raise ContourError(
                f"contour {i} at Re s = {c} is not inside ({params.left_pole}, {params.right_pole})"
            )
    for outer in outers:
        if _outer_slack(outer, offsets) <= 0:
            raise ContourError(
                f"contours {tuple(offsets)} cross the poles of the coupling factor "
                f"with coefficient {outer.coefficient}"
            )


def _pole_bounds(inner: Sequence[InnerParams]) -> List[Tuple[float, float]]:
    bounds = []
    for i, params in enumerate(inner):
        lower, upper = params.left_pole, params.right_pole
        if not lower < upper:
            raise ContourError(
                f"variable {i}: left poles reach {lower}, right poles start at {upper}"
            )
        bounds.append((lower, upper))
    return bounds


def _saddle_offset(params: InnerParams, log_z: float, lower: float, upper: float) -> float:
    """Line position minimizing |integrand| on the real axis (single variable only)."""
    if math.isfinite(lower) and math.isfinite(upper):
        return 0.5 * (lower + upper)
    if math.isfinite(lower):
        lo, hi = lower + _EDGE_MARGIN, lower + _EDGE_MARGIN + _SADDLE_SPAN
    elif math.isfinite(upper):
        lo, hi = upper - _EDGE_MARGIN - _SADDLE_SPAN, upper - _EDGE_MARGIN
    else:
        lo, hi = -_SADDLE_SPAN, _SADDLE_SPAN

    def objective(c: float) -> float:
        value = _axis_log(params, log_z, np.array([c + 0j]))[0].real
        return value if math.isfinite(value) else 1e300

    result = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-3})
    return float(result.x)


def _allocate_offsets(inner: Sequence[InnerParams], outer: OuterParam,
                      log_z: Sequence[float]) -> List[float]:
    """
    Split the room left by the coupling factor between the contours.

    Each contour gets an equal share of the slack, measured in units of its
    outer weight, and the coupling factor keeps one share. Arguments well
    below one pull their contour closer to the left poles, which limits the
    growth of |z^{-s}| along the line.
    """
    bounds = _pole_bounds(inner)
    if any(not math.isfinite(lower) for lower, _ in bounds):
        raise ContourError("automatic placement needs a left pole family on every contour; pass offsets")
    slack = 1.0 - outer.coefficient - sum(w * lower for w, (lower, _) in zip(outer.weights, bounds))
    if slack <= 0:
        raise ContourError(
            f"no contour fits: coupling factor leaves slack {slack:.3g} beyond the left poles"
        )
    share = slack / (len(inner) + 1)
    offsets = []
    for w, (lower, upper), lz in zip(outer.weights, bounds, log_z):
        pull = 1.0 / (1.0 + 0.1 * max(0.0, -lz))
        c = lower + max(0.25, pull) * share / w
        if c >= upper:
            c = 0.5 * (lower + upper)
        offsets.append(c)
    return offsets


def _decay_half_length(log_magnitude: Callable[[np.ndarray], np.ndarray], label: str) -> float:
    """Smallest T beyond which the integrand stays below threshold times its maximum."""
    t_max = settings.contour_max_half_length
    y = np.concatenate([np.linspace(0.0, 20.0, 801), np.geomspace(20.0, t_max, 800)[1:]])
    g = log_magnitude(y)
    g = np.where(np.isfinite(g), g, -np.inf)
    peak = np.max(g)
    if not math.isfinite(peak):
        raise ContourError(f"{label}: integrand vanishes on the contour")
    above = np.nonzero(g > peak + math.log(settings.contour_decay_threshold))[0]
    last = int(above[-1])
    if last == len(y) - 1:
        raise ConvergenceError(
            f"{label}: integrand has not decayed below threshold by T = {t_max}",
            value=float("nan"), bound=float(math.exp(g[-1] - peak)),
        )
    return max(1.0, _TRUNCATION_SAFETY * float(y[last + 1]))


def _to_real(estimate: _Estimate, label: str) -> float:
    value = estimate.value
    floor = settings.imag_abs_tol + 64 * np.finfo(float).eps * estimate.scale
    if abs(value.imag) > settings.imag_rel_tol * abs(value.real) + floor:
        raise AccuracyError(
            f"{label}: imaginary residue {value.imag:.3e} too large for real part {value.real:.3e}"
        )
    return float(value.real)


def _scale(log_factor: float, label: str) -> float:
    """exp of a peak log-magnitude pulled out of the quadrature sum."""
    try:
        return math.exp(log_factor)
    except OverflowError as e:
        raise EvaluationError(
            f"{label}: integrand scale e^{log_factor:.6g} is beyond double range"
        ) from e


def _refine(evaluate: Callable[[float], _Estimate], fixed_step: float, gap_step: float,
            contour: ContourConfig, label: str,
            history: Optional[List[float]] = None) -> float:
    """
    Run the trapezoid rule at one step (fixed) or halve until stable.

    When ``history`` is given, the real part of every estimate is appended
    to it in the order the steps were tried.
    """
    if contour.refinement == Refinement.FIXED:
        return _to_real(evaluate(fixed_step), label)

    step = min(fixed_step, gap_step)
    previous = evaluate(step)
    if history is not None:
        history.append(float(previous.value.real))
    current = previous
    diff = float("inf")
    for _ in range(settings.contour_max_halvings):
        step *= 0.5
        current = evaluate(step)
        if history is not None:
            history.append(float(current.value.real))
        diff = abs(current.value.real - previous.value.real)
        roundoff = 64 * np.finfo(float).eps * current.scale
        if diff <= contour.tolerance * abs(current.value.real) + roundoff:
            return _to_real(current, label)
        previous = current
    logger.warning(f"{label}: refinement stopped at step {step:.3g} with delta {diff:.3e}")
    raise ConvergenceError(
        f"{label}: successive estimates still differ by {diff:.3e}",
        value=float(current.value.real), bound=diff,
    )


def _trapezoid_weights(count: int, step: float) -> np.ndarray:
    weights = np.full(count, step)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return weights


# ---------------------------------------------------------------------------
# Meijer-G
# ---------------------------------------------------------------------------

def meijer_inner(spec: MeijerGSpec) -> InnerParams:
    """The Meijer-G integrand as a single-variable Fox-H factor with unit weights."""
    return InnerParams(
        c=tuple((a, 1.0) for a in spec.a_top + spec.a_bot),
        d=tuple((b, 1.0) for b in spec.b_top + spec.b_bot),
        m=len(spec.b_top),
        n=len(spec.a_top),
    )


def meijer_g(spec: MeijerGSpec, x: float, contour: Optional[ContourConfig] = None) -> float:
    """
    Evaluate G^{m,n}_{p,q}[x] by quadrature on one Bromwich line.

    Args:
        spec: Parameter lists
        x: Positive argument
        contour: Quadrature settings; offset and truncation found automatically when omitted

    Returns:
        Real value of the Meijer-G function

    Raises:
        ContourError: If a given offset does not separate the pole families
        ConvergenceError: If the truncation or refinement cannot meet the tolerance
    """
    if not x > 0:
        raise ValueError(f"Meijer-G argument must be positive, got {x}")
    contour = contour or ContourConfig()
    inner = meijer_inner(spec)
    return _single_line(inner, math.log(x), contour, f"G{spec.orders}")


def _single_line(inner: InnerParams, log_z: float, contour: ContourConfig, label: str) -> float:
    (lower, upper), = _pole_bounds([inner])
    if contour.offsets is not None:
        c = contour.offsets[0]
        _check_offsets([inner], [], [c])
    else:
        c = _saddle_offset(inner, log_z, lower, upper)

    def log_magnitude(y: np.ndarray) -> np.ndarray:
        return _axis_log(inner, log_z, c + 1j * y).real

    half = contour.half_length or _decay_half_length(log_magnitude, label)
    gap = min(c - lower, upper - c)

    def evaluate(step: float) -> _Estimate:
        count = int(math.ceil(half / step))
        if 2 * count + 1 > settings.node_budget:
            raise NodeBudgetError(f"{label}: {2 * count + 1} nodes exceed the budget")
        y = step * np.arange(-count, count + 1)
        terms = np.exp(_axis_log(inner, log_z, c + 1j * y)) * _trapezoid_weights(y.size, step)
        return _Estimate(terms.sum() / (2 * math.pi), float(np.abs(terms).sum() / (2 * math.pi)))

    fixed_step = 2 * half / contour.nodes_per_axis
    gap_step = 2 * math.pi * gap / _DIGITS
    return _refine(evaluate, fixed_step, gap_step, contour, label)


# ---------------------------------------------------------------------------
# Multivariate Fox-H
# ---------------------------------------------------------------------------

def fox_h(spec: FoxHSpec, node_budget: Optional[int] = None) -> float:
    """
    Evaluate a multivariate Fox-H function in the outer/inner form.

    Args:
        spec: Arguments, parameter groups and contour settings
        node_budget: Work cap (Gamma evaluations or convolution products)

    Returns:
        Real value of the function

    Raises:
        ContourError: Pole families cannot be separated
        ConvergenceError: Truncation or refinement cannot meet the tolerance
        NodeBudgetError: The quadrature would exceed the work cap
    """
    budget = node_budget if node_budget is not None else settings.node_budget
    log_z = [math.log(z) for z in spec.variables]
    label = f"H[r={spec.rank}]"
    if spec.rank == 1 and not spec.outer_params:
        return _single_line(spec.inner_params[0], log_z[0], spec.contour, label)
    if len(spec.outer_params) == 1:
        return _lattice_fox_h(spec, log_z, budget, label)
    return _tensor_fox_h(spec, log_z, budget, label)


def fox_h_bivariate(spec: FoxHSpec, node_budget: Optional[int] = None) -> float:
    """Two-contour Fox-H (see fox_h)."""
    if spec.rank != 2:
        raise ValueError(f"bivariate Fox-H needs 2 variables, got {spec.rank}")
    return fox_h(spec, node_budget)


def fox_h_trivariate(spec: FoxHSpec, node_budget: Optional[int] = None) -> float:
    """Three-contour Fox-H (see fox_h)."""
    if spec.rank != 3:
        raise ValueError(f"trivariate Fox-H needs 3 variables, got {spec.rank}")
    return fox_h(spec, node_budget)


def _lattice_fox_h(spec: FoxHSpec, log_z: List[float], budget: int, label: str) -> float:
    inner = spec.inner_params
    outer = spec.outer_params[0]
    bounds = _pole_bounds(inner)
    if spec.contour.offsets is not None:
        offsets = list(spec.contour.offsets)
        _check_offsets(inner, [outer], offsets)
    else:
        offsets = _allocate_offsets(inner, outer, log_z)
    slack = _outer_slack(outer, offsets)
    weights = outer.weights
    r = spec.rank

    base = [float(_axis_log(p, lz, np.array([c + 0j]))[0].real)
            for p, lz, c in zip(inner, log_z, offsets)]

    halves = []
    for i in range(r):
        others = sum(base) - base[i]

        def log_magnitude(y: np.ndarray, i: int = i, others: float = others) -> np.ndarray:
            own = _axis_log(inner[i], log_z[i], offsets[i] + 1j * y).real
            with np.errstate(all="ignore"):
                coupling = special.loggamma(slack - 1j * weights[i] * y).real
            return own + others + coupling

        if spec.contour.half_length is not None:
            halves.append(spec.contour.half_length)
        else:
            halves.append(_decay_half_length(log_magnitude, f"{label} axis {i}"))

    gaps = [slack] + [w * min(c - lower, upper - c)
                      for w, c, (lower, upper) in zip(weights, offsets, bounds)]
    gap_step = 2 * math.pi * min(gaps) / _DIGITS
    fixed_step = min(w * 2 * t / spec.contour.nodes_per_axis for w, t in zip(weights, halves))

    def evaluate(delta: float) -> _Estimate:
        counts = [int(math.ceil(t * w / delta)) for t, w in zip(halves, weights)]
        sizes = [2 * k + 1 for k in counts]
        work, running = 0, sizes[0]
        for size in sizes[1:]:
            work += running * size
            running += size - 1
        work += running
        if work > budget:
            raise NodeBudgetError(
                f"{label}: lattice step {delta:.3g} needs {work} operations, budget is {budget}"
            )

        log_scale = 0.0
        conv = np.ones(1, dtype=complex)
        for i in range(r):
            step = delta / weights[i]
            y = step * np.arange(-counts[i], counts[i] + 1)
            logf = _axis_log(inner[i], log_z[i], offsets[i] + 1j * y)
            peak = float(np.max(logf.real))
            log_scale += peak
            axis = np.exp(logf - peak) * _trapezoid_weights(y.size, step)
            conv = np.convolve(conv, axis)

        total = (conv.size - 1) // 2
        lattice = np.arange(-total, total + 1)
        with np.errstate(all="ignore"):
            logc = _clean(special.loggamma(slack - 1j * delta * lattice))
        peak = float(np.max(logc.real))
        terms = conv * np.exp(logc - peak)
        factor = _scale(log_scale + peak, label) / (2 * math.pi) ** r
        return _Estimate(terms.sum() * factor, float(np.abs(terms).sum() * factor))

    return _refine(evaluate, fixed_step, gap_step, spec.contour, label)


def _tensor_fox_h(spec: FoxHSpec, log_z: List[float], budget: int, label: str) -> float:
    """Plain tensor-grid trapezoid for specs without exactly one coupling factor."""
    inner = spec.inner_params
    outers = spec.outer_params
    bounds = _pole_bounds(inner)
    if spec.contour.offsets is not None:
        offsets = list(spec.contour.offsets)
    else:
        offsets = []
        for lower, upper in bounds:
            if math.isfinite(lower) and math.isfinite(upper):
                offsets.append(0.5 * (lower + upper))
            elif math.isfinite(lower):
                offsets.append(lower + 0.5)
            elif math.isfinite(upper):
                offsets.append(upper - 0.5)
            else:
                offsets.append(0.0)
    _check_offsets(inner, outers, offsets)
    r = spec.rank

    base = [float(_axis_log(p, lz, np.array([c + 0j]))[0].real)
            for p, lz, c in zip(inner, log_z, offsets)]
    halves = []
    for i in range(r):
        others = sum(base) - base[i]

        def log_magnitude(y: np.ndarray, i: int = i, others: float = others) -> np.ndarray:
            own = _axis_log(inner[i], log_z[i], offsets[i] + 1j * y).real
            s_list = [np.full(y.shape, c + 0j) for c in offsets]
            s_list[i] = offsets[i] + 1j * y
            coupling = sum((_outer_log(o, s_list).real for o in outers), np.zeros(y.shape))
            return own + others + coupling

        if spec.contour.half_length is not None:
            halves.append(spec.contour.half_length)
        else:
            halves.append(_decay_half_length(log_magnitude, f"{label} axis {i}"))

    gaps = [min(c - lower, upper - c) for c, (lower, upper) in zip(offsets, bounds)]
    for outer in outers:
        slack = _outer_slack(outer, offsets)
        gaps.extend(slack / w for w in outer.weights)
    gap_ratio = 2 * math.pi * min(gaps) / _DIGITS
    fixed_scale = 2.0 / spec.contour.nodes_per_axis

    # one common relative step; axis i uses step * halves[i]
    def evaluate(relative: float) -> _Estimate:
        steps = [relative * t for t in halves]
        counts = [int(math.ceil(t / h)) for t, h in zip(halves, steps)]
        work = int(np.prod([2 * k + 1 for k in counts]))
        if work > budget:
            raise NodeBudgetError(f"{label}: tensor grid of {work} nodes exceeds budget {budget}")
        grids = [offsets[i] + 1j * steps[i] * np.arange(-counts[i], counts[i] + 1) for i in range(r)]
        mesh = np.meshgrid(*grids, indexing="ij", sparse=True)
        logf = sum(_axis_log(inner[i], log_z[i], mesh[i]) for i in range(r))
        for outer in outers:
            logf = logf + _outer_log(outer, mesh)
        peak = float(np.max(logf.real))
        weight = np.ones(1)
        for i in range(r):
            weight = np.multiply.outer(weight, _trapezoid_weights(grids[i].size, steps[i]))
        terms = np.exp(logf - peak) * weight.reshape(logf.shape)
        factor = _scale(peak, label) / (2 * math.pi) ** r
        return _Estimate(terms.sum() * factor, float(np.abs(terms).sum() * factor))

    gap_relative = min(gap_ratio / t for t in halves)
    return _refine(evaluate, fixed_scale, gap_relative, spec.contour, label)
