"""
Molecular Absorption Models - absorption coefficient of the THz hop.

Every model implements the same interface, so the link budget can ask for
kappa(f, T, P, humidity) without knowing where the numbers come from. An
explicit ``absorption_override`` on the hop config always wins.

The bundled model covers the 275-400 GHz window: water-vapour volume
mixing ratio from the Buck saturation-pressure relation, two water lines
near 10.8 and 12.7 1/cm plus a power-law residual. Its coefficients are
implementation-defined and are not used by any accuracy-critical test.
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Tuple

from thzrf.errors import AbsorptionModelError
from thzrf.schemas import SPEED_OF_LIGHT, ThzHopConfig

logger = logging.getLogger(__name__)


class AbsorptionModel(ABC):
    """
    Base class for absorption-coefficient models.

    Subclasses provide the valid carrier band and the coefficient in 1/m.
    """

    name: str = ""
    band_hz: Tuple[float, float] = (0.0, math.inf)

    @abstractmethod
    def _coefficient(self, cfg: ThzHopConfig) -> float:
        """Absorption coefficient in 1/m. Must be implemented by subclasses."""
        pass

    def supports(self, carrier_hz: float) -> bool:
        low, high = self.band_hz
        return low <= carrier_hz <= high

    def coefficient(self, cfg: ThzHopConfig) -> float:
        """
        Absorption coefficient for the hop's carrier and environment.

        Raises:
            AbsorptionModelError: If the carrier lies outside the model band
        """
        if not self.supports(cfg.carrier_hz):
            low, high = self.band_hz
            raise AbsorptionModelError(
                f"model {self.name!r} covers {low / 1e9:g}-{high / 1e9:g} GHz, "
                f"carrier is {cfg.carrier_hz / 1e9:g} GHz"
            )
        kappa = self._coefficient(cfg)
        logger.debug(f"{self.name}: kappa={kappa:.4e} 1/m at {cfg.carrier_hz / 1e9:g} GHz")
        return kappa


def buck_saturation_pressure(temperature_k: float, pressure_hpa: float) -> float:
    """Saturation water-vapour pressure over water in hPa (Buck, enhanced)."""
    celsius = temperature_k - 273.15
    enhancement = 1.0007 + 3.46e-6 * pressure_hpa
    return 6.1121 * enhancement * math.exp(17.502 * celsius / (temperature_k - 32.18))


def water_mixing_ratio(cfg: ThzHopConfig) -> float:
    """Volume mixing ratio of water vapour for the hop's environment."""
    saturation = buck_saturation_pressure(cfg.temperature_k, cfg.pressure_hpa)
    return (cfg.rel_humidity_pct / 100.0) * saturation / cfg.pressure_hpa


class BuckTwoLineModel(AbsorptionModel):
    """Two water lines plus residual, valid from 275 to 400 GHz."""

    name = "buck-two-line"
    band_hz = (275e9, 400e9)

    LINE_1_WAVENUMBER = 10.835
    LINE_2_WAVENUMBER = 12.664
    RESIDUAL_SCALE = 0.915e-112
    RESIDUAL_POWER = 9.42

    def _coefficient(self, cfg: ThzHopConfig) -> float:
        mix = water_mixing_ratio(cfg)
        dry = 1.0 - mix
        # wavenumber in 1/cm
        nu = cfg.carrier_hz / (100.0 * SPEED_OF_LIGHT)

        strength_1 = 5.159e-5 * dry * (-6.65e-5 * dry + 0.0159)
        width_1 = (-2.09e-4 * dry + 0.05) ** 2
        strength_2 = 0.1925 * mix * (0.1350 * mix + 0.0318)
        width_2 = (0.4241 * mix + 0.0998) ** 2

        line_1 = strength_1 / (width_1 + (nu - self.LINE_1_WAVENUMBER) ** 2)
        line_2 = strength_2 / (width_2 + (nu - self.LINE_2_WAVENUMBER) ** 2)
        residual = mix / 0.0157 * (
            2e-4 + self.RESIDUAL_SCALE * cfg.carrier_hz ** self.RESIDUAL_POWER
        )
        return line_1 + line_2 + residual


_MODELS = {
    BuckTwoLineModel.name: BuckTwoLineModel,
}


def available_models() -> Tuple[str, ...]:
    return tuple(sorted(_MODELS))


def get_absorption_model(name: str) -> AbsorptionModel:
    """Look up a bundled model by name."""
    try:
        return _MODELS[name]()
    except KeyError as e:
        raise AbsorptionModelError(
            f"unknown absorption model {name!r}; available: {', '.join(available_models())}"
        ) from e


def absorption_coefficient(cfg: ThzHopConfig) -> float:
    """kappa in 1/m: the override when given, else the configured model."""
    if cfg.absorption_override is not None:
        return cfg.absorption_override
    return get_absorption_model(cfg.absorption_model).coefficient(cfg)
