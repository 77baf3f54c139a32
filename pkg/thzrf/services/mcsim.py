"""
Monte Carlo Service - channel sampling and empirical ASER.

Two abstraction levels:
- conditional: average P(e | min(lam1, lam2)) over channel draws, the exact
  counterpart of the analytical expressions
- symbol_level: modulate, add noise, detect at the relay and again at the
  destination; a relay error is an end-to-end error

Trials are split into partitions. Partition i draws from a Philox stream
seeded by SeedSequence(seed, spawn_key=(i,)), so results depend only on
(seed, partitions, trials) and not on the worker count.
"""

import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from thzrf.config import settings
from thzrf.errors import StatisticsWarning
from thzrf.schemas import (
    AlphaMuFading, HqamScheme, NakagamiFading, NcfskScheme, PointingError, RqamScheme,
    SimConfig, SimMode,
)
from thzrf.services.constellations import Constellation, build_constellation, conditional_ser
from thzrf.services.linkstats import SnrModel

logger = logging.getLogger(__name__)

Scheme = Union[RqamScheme, HqamScheme, NcfskScheme]

WEAK_FLAG = "mc-weak-statistics"

# complex-sample budget of one symbol-level detection step
_DETECTION_CELLS = 4_000_000


class McResult(NamedTuple):
    aser: float
    stderr: float
    trials: int
    flags: Tuple[str, ...] = ()


class _Moments(NamedTuple):
    total: float
    squares: float
    count: int


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def partition_rng(seed: int, partition: int) -> np.random.Generator:
    """Counter-based stream of one partition."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(partition,))))


def sample_alpha_mu(f: AlphaMuFading, rng: np.random.Generator, size=None):
    """R = Omega (G / mu)^{1/alpha}, G ~ Gamma(mu, 1)."""
    return f.omega * (rng.gamma(f.mu, 1.0, size) / f.mu) ** (1.0 / f.alpha)


def sample_pointing(p: PointingError, rng: np.random.Generator, size=None):
    """Inverse CDF: S0 U^{1/phi}."""
    return p.s0 * rng.random(size) ** (1.0 / p.phi)


def sample_nakagami(f: NakagamiFading, rng: np.random.Generator, size=None):
    """sqrt(Omega_m G / m), G ~ Gamma(m, 1)."""
    return np.sqrt(f.omega_m * rng.gamma(f.m, 1.0, size) / f.m)


def sample_hop_snrs(model: SnrModel, size: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Instantaneous SNRs (lam1, lam2) of the THz and RF hops."""
    h1 = sample_alpha_mu(model.thz_fading, rng, size) * sample_pointing(model.pointing, rng, size)
    h2 = sample_nakagami(model.rf_fading, rng, size)
    return model.thz_gain * h1 * h1, model.rf_gain * h2 * h2


def sample_snr_e2e(model: SnrModel, size: int, rng: np.random.Generator) -> np.ndarray:
    lam1, lam2 = sample_hop_snrs(model, size, rng)
    return np.minimum(lam1, lam2)


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------

def detect_errors(constellation: Constellation, symbols: np.ndarray, lam: np.ndarray,
                  rng: np.random.Generator) -> np.ndarray:
    """
    Transmit symbol indices over AWGN at SNR lam and report detection errors.

    QAM: nearest neighbour over the point set. FSK: the branch with the
    largest envelope, carrier phase unknown.
    """
    n = symbols.size
    if constellation.orthogonal:
        m = constellation.label_count
        noise = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / math.sqrt(2.0)
        phase = np.exp(2j * math.pi * rng.random(n))
        noise[np.arange(n), symbols] += np.sqrt(lam) * phase
        return np.argmax(np.abs(noise), axis=1) != symbols

    points = constellation.points
    sigma = np.sqrt(0.5 / lam)
    received = points[symbols] + sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    decided = np.argmin(np.abs(received[:, None] - points[None, :]), axis=1)
    return decided != symbols


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------

def _chunks(total: int, size: int):
    done = 0
    while done < total:
        step = min(size, total - done)
        yield step
        done += step


def _conditional_partition(model: SnrModel, schemes: Sequence[Scheme], cfg: SimConfig,
                           partition: int) -> List[_Moments]:
    rng = partition_rng(cfg.seed, partition)
    totals = [[] for _ in schemes]
    squares = [[] for _ in schemes]
    for size in _chunks(cfg.trials_per_partition, cfg.chunk_size):
        lam = sample_snr_e2e(model, size, rng)
        # one set of channel draws serves every scheme
        for j, scheme in enumerate(schemes):
            ser = conditional_ser(scheme, lam)
            totals[j].append(float(np.sum(ser)))
            squares[j].append(float(np.sum(ser * ser)))
    return [_Moments(math.fsum(t), math.fsum(q), cfg.trials_per_partition)
            for t, q in zip(totals, squares)]


def _symbol_partition(model: SnrModel, scheme: Scheme, cfg: SimConfig, partition: int) -> int:
    rng = partition_rng(cfg.seed, partition)
    constellation = build_constellation(scheme)
    width = constellation.label_count
    step = max(1_000, min(cfg.chunk_size, _DETECTION_CELLS // width))
    errors = 0
    for size in _chunks(cfg.trials_per_partition, step):
        lam1, lam2 = sample_hop_snrs(model, size, rng)
        symbols = rng.integers(0, width, size)
        relay_wrong = detect_errors(constellation, symbols, lam1, rng)
        destination_wrong = detect_errors(constellation, symbols, lam2, rng)
        errors += int(np.count_nonzero(relay_wrong | destination_wrong))
    return errors


def _map_partitions(fn, partitions: int):
    workers = max(1, min(settings.workers, partitions))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(partitions)))


def _flag_weak(label: str, aser: float, stderr: float) -> Tuple[str, ...]:
    if stderr > aser / 3.0:
        message = f"{label}: MC stderr {stderr:.3e} exceeds a third of the estimate {aser:.3e}"
        logger.warning(message)
        warnings.warn(message, StatisticsWarning)
        return (WEAK_FLAG,)
    return ()


def _from_moments(label: str, parts: Sequence[_Moments]) -> McResult:
    n = sum(p.count for p in parts)
    total = math.fsum(p.total for p in parts)
    squares = math.fsum(p.squares for p in parts)
    mean = total / n
    variance = max(0.0, (squares - n * mean * mean) / (n - 1))
    stderr = math.sqrt(variance / n)
    return McResult(mean, stderr, n, _flag_weak(label, mean, stderr))


def run_mc(model: SnrModel, scheme: Scheme, cfg: SimConfig) -> McResult:
    """
    Empirical ASER of one scheme.

    Returns:
        McResult with the estimate, its standard error (sample or binomial),
        the trial count and a weak-statistics flag when stderr > aser / 3
    """
    if cfg.mode == SimMode.CONDITIONAL:
        return run_mc_coupled(model, [scheme], cfg)[scheme.label]

    started = time.perf_counter()
    counts = _map_partitions(lambda i: _symbol_partition(model, scheme, cfg, i), cfg.partitions)
    errors = sum(counts)
    p = errors / cfg.trials
    stderr = math.sqrt(p * (1.0 - p) / cfg.trials)
    logger.info(
        f"symbol-level {scheme.label} @ {model.power.snr_db:g} dB: {errors}/{cfg.trials} errors "
        f"in {time.perf_counter() - started:.2f}s"
    )
    return McResult(p, stderr, cfg.trials, _flag_weak(scheme.label, p, stderr))


def run_mc_coupled(model: SnrModel, schemes: Sequence[Scheme], cfg: SimConfig) -> Dict[str, McResult]:
    """
    Conditional-mode ASER of several schemes on shared channel draws.

    Sharing the draws leaves each estimate unbiased and makes differences
    between schemes far less noisy.
    """
    if cfg.mode != SimMode.CONDITIONAL:
        return {s.label: run_mc(model, s, cfg) for s in schemes}
    started = time.perf_counter()
    per_partition = _map_partitions(
        lambda i: _conditional_partition(model, schemes, cfg, i), cfg.partitions
    )
    results = {}
    for j, scheme in enumerate(schemes):
        results[scheme.label] = _from_moments(scheme.label, [parts[j] for parts in per_partition])
    logger.info(
        f"conditional MC of {len(schemes)} scheme(s) @ {model.power.snr_db:g} dB, "
        f"{cfg.trials} trials in {time.perf_counter() - started:.2f}s"
    )
    return results


def empirical_cdf(samples: np.ndarray, points: np.ndarray) -> np.ndarray:
    ordered = np.sort(samples)
    return np.searchsorted(ordered, points, side="right") / ordered.size


def dkw_band(n: int, confidence: float = 0.99) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


def sample_e2e_for_check(model: SnrModel, n: int, seed: int, partitions: int = 1) -> np.ndarray:
    """n end-to-end SNR draws, concatenated over partitions in index order."""
    per = n // partitions
    sizes = [per + (1 if i < n - per * partitions else 0) for i in range(partitions)]
    return np.concatenate([
        sample_snr_e2e(model, size, partition_rng(seed, i)) for i, size in enumerate(sizes)
    ])
