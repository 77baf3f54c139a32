"""
Domain schemas - validated, immutable parameter sets.

Every configuration object that crosses a module boundary is a frozen
pydantic model so that invariants are checked once, at construction, and
evaluators can treat their inputs as plain values.
"""

import math
from enum import Enum
from pathlib import Path
from typing import Annotated, FrozenSet, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SPEED_OF_LIGHT = 299_792_458.0

HQAM_ORDERS = (4, 8, 16, 32, 64)


# ---------------------------------------------------------------------------
# Mellin-Barnes quadrature
# ---------------------------------------------------------------------------

class Refinement(str, Enum):
    """Step control for contour quadrature."""
    FIXED = "fixed"
    HALVING = "halving-until-tolerance"


class ContourConfig(BaseModel):
    """
    Contour quadrature settings.

    Attributes:
        offsets: Real part of each vertical line; chosen automatically when None
        half_length: Truncation T of [-T, T]; found from the integrand decay when None
        nodes_per_axis: Initial node count per axis
        refinement: Fixed step or halving until successive estimates agree
        tolerance: Relative agreement required by the halving mode
    """
    model_config = ConfigDict(frozen=True)

    offsets: Optional[Tuple[float, ...]] = Field(None, description="Real parts of the Bromwich lines")
    half_length: Optional[float] = Field(None, gt=0, description="Imaginary truncation T")
    nodes_per_axis: int = Field(128, ge=64, description="Initial nodes per axis")
    refinement: Refinement = Field(Refinement.HALVING, description="Refinement mode")
    tolerance: float = Field(1e-10, gt=0, description="Relative tolerance for halving")


class MeijerGSpec(BaseModel):
    """
    Parameters of G^{m,n}_{p,q}[x | a_top, a_bot; b_top, b_bot].

    The integrand is prod Gamma(b_top + s) prod Gamma(1 - a_top - s) over
    prod Gamma(1 - b_bot - s) prod Gamma(a_bot + s), times x^{-s}.
    """
    model_config = ConfigDict(frozen=True)

    a_top: Tuple[float, ...] = ()
    a_bot: Tuple[float, ...] = ()
    b_top: Tuple[float, ...] = ()
    b_bot: Tuple[float, ...] = ()

    @property
    def orders(self) -> Tuple[int, int, int, int]:
        """(m, n, p, q)"""
        return (
            len(self.b_top),
            len(self.a_top),
            len(self.a_top) + len(self.a_bot),
            len(self.b_top) + len(self.b_bot),
        )

    @property
    def left_pole(self) -> float:
        """Rightmost pole of the Gamma(b + s) family (-inf when empty)."""
        return max((-b for b in self.b_top), default=-math.inf)

    @property
    def right_pole(self) -> float:
        """Leftmost pole of the Gamma(1 - a - s) family (+inf when empty)."""
        return min((1.0 - a for a in self.a_top), default=math.inf)

    @model_validator(mode="after")
    def _check_separable(self) -> "MeijerGSpec":
        if not self.b_top and not self.a_top:
            raise ValueError("Meijer-G needs at least one numerator Gamma factor")
        if self.left_pole >= self.right_pole:
            raise ValueError(
                f"pole families overlap: left {self.left_pole} >= right {self.right_pole}"
            )
        return self


class OuterParam(BaseModel):
    """Numerator factor Gamma(1 - coefficient - sum_i weights[i] * s_i)."""
    model_config = ConfigDict(frozen=True)

    coefficient: float
    weights: Tuple[float, ...]

    @field_validator("weights")
    @classmethod
    def _positive_weights(cls, v):
        if any(w <= 0 for w in v):
            raise ValueError("outer weights must be positive")
        return v


class InnerParams(BaseModel):
    """
    Per-variable Gamma factors of a multivariate Fox-H integrand.

    Attributes:
        c: (coefficient, weight) pairs; the first n give Gamma(1 - c - w s) in
           the numerator, the rest Gamma(c + w s) in the denominator
        d: (coefficient, weight) pairs; the first m give Gamma(d + w s) in the
           numerator, the rest Gamma(1 - d - w s) in the denominator
        m: Number of numerator d-factors
        n: Number of numerator c-factors
    """
    model_config = ConfigDict(frozen=True)

    c: Tuple[Tuple[float, float], ...] = ()
    d: Tuple[Tuple[float, float], ...] = ()
    m: int = Field(0, ge=0)
    n: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_counts(self) -> "InnerParams":
        if self.m > len(self.d) or self.n > len(self.c):
            raise ValueError("numerator counts exceed parameter lists")
        if any(w <= 0 for _, w in self.c + self.d):
            raise ValueError("inner weights must be positive")
        return self

    @property
    def left_pole(self) -> float:
        return max((-d / w for d, w in self.d[: self.m]), default=-math.inf)

    @property
    def right_pole(self) -> float:
        return min(((1.0 - c) / w for c, w in self.c[: self.n]), default=math.inf)


class FoxHSpec(BaseModel):
    """
    Multivariate Fox-H function in the outer/inner parameter form.

    Attributes:
        variables: Positive arguments z_i, one contour each
        outer_params: Numerator factors coupling all contours
        inner_params: One InnerParams per variable
        contour: Quadrature settings
    """
    model_config = ConfigDict(frozen=True)

    variables: Tuple[float, ...]
    outer_params: Tuple[OuterParam, ...] = ()
    inner_params: Tuple[InnerParams, ...]
    contour: ContourConfig = ContourConfig()

    @model_validator(mode="after")
    def _check_shapes(self) -> "FoxHSpec":
        r = len(self.variables)
        if r == 0:
            raise ValueError("Fox-H needs at least one variable")
        if any(not (z > 0 and math.isfinite(z)) for z in self.variables):
            raise ValueError(f"Fox-H arguments must be finite and positive, got {self.variables}")
        if len(self.inner_params) != r:
            raise ValueError("one inner parameter list per variable is required")
        for outer in self.outer_params:
            if len(outer.weights) != r:
                raise ValueError("outer weights must have one entry per variable")
        if self.contour.offsets is not None and len(self.contour.offsets) != r:
            raise ValueError("one contour offset per variable is required")
        return self

    @property
    def rank(self) -> int:
        return len(self.variables)


# ---------------------------------------------------------------------------
# Link budget and fading
# ---------------------------------------------------------------------------

class ThzHopConfig(BaseModel):
    """
    Deterministic THz hop (source to relay).

    Attributes:
        carrier_hz: Carrier frequency f_sr
        distance_m: Hop length d_sr
        tx_gain_db / rx_gain_db: Antenna gains in dBi
        path_loss_exp: Path-loss exponent (2 in free space)
        temperature_k, pressure_hpa, rel_humidity_pct: Environment for the absorption model
        absorption_override: Absorption coefficient in 1/m, bypasses the model
        absorption_model: Name of the bundled absorption model
    """
    model_config = ConfigDict(frozen=True)

    carrier_hz: float = Field(275e9, gt=0)
    distance_m: float = Field(300.0, gt=0)
    tx_gain_db: float = 52.0
    rx_gain_db: float = 52.0
    path_loss_exp: float = Field(2.0, ge=2.0)
    temperature_k: float = Field(296.0, gt=0)
    pressure_hpa: float = Field(1013.25, gt=0)
    rel_humidity_pct: float = Field(50.0, ge=0, le=100)
    absorption_override: Optional[float] = Field(None, ge=0)
    absorption_model: str = "buck-two-line"


class RfHopConfig(BaseModel):
    """Deterministic RF hop (relay to destination)."""
    model_config = ConfigDict(frozen=True)

    carrier_hz: float = Field(8e9, gt=0)
    distance_m: float = Field(800.0, gt=0)
    tx_gain_db: float = 52.0
    rx_gain_db: float = 52.0
    path_loss_exp: float = Field(2.0, ge=2.0)


class AlphaMuFading(BaseModel):
    """alpha-mu small-scale fading of the THz hop."""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(2.3, gt=0)
    mu: float = Field(2.25, ge=0.5)
    omega: float = Field(1.75, gt=0)


class PointingError(BaseModel):
    """Antenna misalignment: beam-to-jitter ratio phi and collected fraction s0."""
    model_config = ConfigDict(frozen=True)

    phi: float = Field(6.75, gt=0)
    s0: float = Field(0.56, gt=0, le=1)


class NakagamiFading(BaseModel):
    """Nakagami-m fading of the RF hop."""
    model_config = ConfigDict(frozen=True)

    m: float = Field(2.3, ge=0.5)
    omega_m: float = Field(1.5, gt=0)


class PowerNoise(BaseModel):
    """Transmit powers and the common noise variance."""
    model_config = ConfigDict(frozen=True)

    p_s: float = Field(1.0, gt=0)
    p_r: float = Field(1.0, gt=0)
    n0: float = Field(1.0, gt=0)

    @classmethod
    def from_snr_db(cls, snr_db: float, n0: float = 1.0) -> "PowerNoise":
        """Tie both powers to one average transmit SNR."""
        p = n0 * 10.0 ** (snr_db / 10.0)
        return cls(p_s=p, p_r=p, n0=n0)

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.p_s / self.n0)


# ---------------------------------------------------------------------------
# Modulation schemes
# ---------------------------------------------------------------------------

class RqamScheme(BaseModel):
    """
    Rectangular QAM with M_I x M_Q points (SQAM and BPSK are special cases).

    Attributes:
        m_i: In-phase levels
        m_q: Quadrature levels
        beta: Quadrature to in-phase decision distance ratio
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["rqam"] = "rqam"
    m_i: int = Field(4, ge=1)
    m_q: int = Field(2, ge=1)
    beta: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check_size(self) -> "RqamScheme":
        if self.m_i * self.m_q < 2:
            raise ValueError("RQAM needs at least two points")
        return self

    @property
    def p(self) -> float:
        return 1.0 - 1.0 / self.m_i

    @property
    def q(self) -> float:
        return 1.0 - 1.0 / self.m_q

    @property
    def a(self) -> float:
        return math.sqrt(6.0 / ((self.m_i ** 2 - 1) + (self.m_q ** 2 - 1) * self.beta ** 2))

    @property
    def b(self) -> float:
        # a single quadrature level carries no decision distance
        return 0.0 if self.m_q == 1 else self.beta * self.a

    @property
    def coef_d(self) -> float:
        return self.a * self.p * (self.q - 1.0) / math.sqrt(2.0 * math.pi)

    @property
    def coef_f(self) -> float:
        return self.b * (self.p - 1.0) * self.q / math.sqrt(2.0 * math.pi)

    @property
    def coef_g(self) -> float:
        return self.a * self.b * self.p * self.q / math.sqrt(math.pi)

    @property
    def order(self) -> int:
        return self.m_i * self.m_q

    @property
    def label(self) -> str:
        if self.m_i == 2 and self.m_q == 1:
            return "bpsk"
        name = f"{self.m_i}x{self.m_q}-rqam"
        if self.m_i == self.m_q and self.beta == 1.0:
            name = f"{self.order}-sqam"
        if self.beta != 1.0:
            name += f"-b{self.beta:g}"
        return name


class HqamScheme(BaseModel):
    """
    Hexagonal QAM described by its SER-approximation parameters.

    Missing parameters are filled from the bundled lattice geometry of
    order ``m`` (see services.constellations.hqam_parameters).
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["hqam"] = "hqam"
    m: int = 16
    b_param: Optional[float] = Field(None, gt=0)
    bc_param: Optional[float] = Field(None, gt=0)
    alpha_h: Optional[float] = Field(None, gt=0)

    @field_validator("m")
    @classmethod
    def _supported_order(cls, v):
        if v not in HQAM_ORDERS:
            raise ValueError(f"HQAM order must be one of {HQAM_ORDERS}, got {v}")
        return v

    @model_validator(mode="before")
    @classmethod
    def _fill_from_geometry(cls, data):
        if not isinstance(data, dict):
            return data
        keys = ("b_param", "bc_param", "alpha_h")
        order = data.get("m", 16)
        if order in HQAM_ORDERS and any(data.get(k) is None for k in keys):
            # Import here to avoid a circular import with the geometry loader
            from thzrf.services.constellations import hqam_parameters

            table = hqam_parameters(order)
            data = dict(data)
            for key in keys:
                if data.get(key) is None:
                    data[key] = getattr(table, key)
        return data

    @property
    def order(self) -> int:
        return self.m

    @property
    def label(self) -> str:
        return f"{self.m}-hqam"


class NcfskScheme(BaseModel):
    """M-ary noncoherent orthogonal FSK."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["ncfsk"] = "ncfsk"
    m: int = Field(2, ge=2)

    @property
    def order(self) -> int:
        return self.m

    @property
    def label(self) -> str:
        return f"{self.m}-ncfsk"


ModulationScheme = Annotated[
    Union[RqamScheme, HqamScheme, NcfskScheme], Field(discriminator="kind")
]


class PowerExpTerm(BaseModel):
    """coefficient * lam^power * exp(-rate * lam)"""
    model_config = ConfigDict(frozen=True)

    coefficient: float
    power: float = Field(-0.5, gt=-1.0)
    rate: float = Field(..., gt=0)


class KummerTerm(BaseModel):
    """coefficient * exp(-damping * lam) * 1F1(1; 3/2; argument * lam)"""
    model_config = ConfigDict(frozen=True)

    coefficient: float
    damping: float = Field(..., gt=0)
    argument: float = Field(..., ge=0)

    @model_validator(mode="after")
    def _check_decay(self) -> "KummerTerm":
        if self.argument >= self.damping:
            raise ValueError(
                f"Kummer term grows: argument {self.argument} >= damping {self.damping}"
            )
        return self


class SerDerivative(BaseModel):
    """
    First derivative of a conditional SER as a sum of kernel terms.

    Every coherent and noncoherent scheme handled here reduces to power-exp
    and damped-Kummer terms, which is what the closed-form integrals need.
    """
    model_config = ConfigDict(frozen=True)

    power_terms: Tuple[PowerExpTerm, ...] = ()
    kummer_terms: Tuple[KummerTerm, ...] = ()


class LinkConstants(BaseModel):
    """
    Fading shapes and the derived scale constants of the end-to-end CDF.

    Attributes:
        A: THz scale N1 / (P_s |h_d1|^2 |h_a1|^2 Omega^2 S0^2)
        C: RF scale m N2 / (P_r |h_d2|^2 Omega_m)
    """
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., gt=0)
    mu: float = Field(..., gt=0)
    phi: float = Field(..., gt=0)
    m: float = Field(..., gt=0)
    A: float = Field(..., gt=0)
    C: float = Field(..., gt=0)

    @property
    def B(self) -> float:
        return self.phi / (self.alpha * math.gamma(self.mu) * math.gamma(self.m))


def sqam(m: int) -> RqamScheme:
    """Square QAM of order m as an RQAM instance."""
    side = math.isqrt(m)
    if m < 4 or side * side != m:
        raise ValueError(f"SQAM order must be a perfect square >= 4, got {m}")
    return RqamScheme(m_i=side, m_q=side, beta=1.0)


def bpsk() -> RqamScheme:
    return RqamScheme(m_i=2, m_q=1, beta=1.0)


# ---------------------------------------------------------------------------
# Simulation and sweeps
# ---------------------------------------------------------------------------

class SimMode(str, Enum):
    """Monte Carlo abstraction level."""
    CONDITIONAL = "conditional"
    SYMBOL_LEVEL = "symbol_level"


class SimConfig(BaseModel):
    """
    Monte Carlo run settings.

    Attributes:
        trials: Total channel realizations (symbols in symbol-level mode)
        seed: Root seed of the per-partition streams
        partitions: Independent streams; trials are split evenly
        mode: Conditional-SER averaging or full two-hop symbol simulation
        chunk_size: Draws generated per vectorized step
    """
    model_config = ConfigDict(frozen=True)

    trials: int = Field(1_000_000, ge=10_000)
    seed: int = Field(20240521, ge=0, lt=2 ** 64)
    partitions: int = Field(4, ge=1)
    mode: SimMode = SimMode.CONDITIONAL
    chunk_size: int = Field(250_000, ge=1_000)

    @model_validator(mode="after")
    def _check_split(self) -> "SimConfig":
        if self.trials % self.partitions:
            raise ValueError(
                f"trials ({self.trials}) must be divisible by partitions ({self.partitions})"
            )
        return self

    @property
    def trials_per_partition(self) -> int:
        return self.trials // self.partitions


class OutputKind(str, Enum):
    ANALYTICAL = "analytical"
    ASYMPTOTIC = "asymptotic"
    MC = "mc"


class SweepAxis(str, Enum):
    """Quantity varied along the sweep grid."""
    SNR_DB = "snr_db"
    OMEGA_M = "omega_m"
    D_SR = "d_sr"


def _grid(start: float, stop: float, step: float) -> List[float]:
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(count)]


class SweepSpec(BaseModel):
    """
    What to evaluate and where to write it.

    Attributes:
        snr_db: (start, stop, step) of the average transmit SNR grid in dB
        schemes: Modulation schemes, one curve each
        outputs: Requested columns
        sim: Monte Carlo settings, required when mc is requested
        out_path: CSV destination
        axis: Swept quantity; snr_db unless a link parameter is swept
        axis_range: (start, stop, step) for omega_m / d_sr sweeps
        fixed_snr_db: SNR used by omega_m / d_sr sweeps
        total_distance_m: d_sr + d_rd held fixed by d_sr sweeps
    """
    model_config = ConfigDict(frozen=True)

    snr_db: Tuple[float, float, float] = (0.0, 70.0, 5.0)
    schemes: Tuple[ModulationScheme, ...] = (RqamScheme(),)
    outputs: FrozenSet[OutputKind] = frozenset({OutputKind.ANALYTICAL})
    sim: Optional[SimConfig] = None
    out_path: Path = Path("aser.csv")
    axis: SweepAxis = SweepAxis.SNR_DB
    axis_range: Optional[Tuple[float, float, float]] = None
    fixed_snr_db: float = 40.0
    total_distance_m: float = Field(1100.0, gt=0)

    @field_validator("snr_db", "axis_range")
    @classmethod
    def _check_range(cls, v):
        if v is None:
            return v
        start, stop, step = v
        if not start < stop:
            raise ValueError(f"grid start {start} must be below stop {stop}")
        if not step > 0:
            raise ValueError(f"grid step {step} must be positive")
        return v

    @model_validator(mode="after")
    def _check_consistency(self) -> "SweepSpec":
        if OutputKind.MC in self.outputs and self.sim is None:
            raise ValueError("mc output requested but no [sim] settings given")
        if self.axis != SweepAxis.SNR_DB and self.axis_range is None:
            raise ValueError(f"axis {self.axis.value} needs axis_range")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        return self

    def grid(self) -> List[float]:
        """Values of the swept quantity, stop included."""
        if self.axis == SweepAxis.SNR_DB:
            return _grid(*self.snr_db)
        return _grid(*self.axis_range)


class AserRow(BaseModel):
    """One (grid point, scheme) result; absent outputs stay None."""
    model_config = ConfigDict(frozen=True)

    snr_db: float
    scheme: str
    aser_analytical: Optional[float] = None
    aser_asymptotic: Optional[float] = None
    aser_mc: Optional[float] = None
    mc_stderr: Optional[float] = None
    mc_trials: Optional[int] = None
    flags: Tuple[str, ...] = ()
    axis_value: Optional[float] = None


class AserCurve(BaseModel):
    """Sweep result, sorted by (grid value, scheme)."""
    model_config = ConfigDict(frozen=True)

    axis: SweepAxis = SweepAxis.SNR_DB
    rows: Tuple[AserRow, ...] = ()

    @property
    def flagged(self) -> List[AserRow]:
        return [row for row in self.rows if row.flags]
