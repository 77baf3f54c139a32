import logging
import os
from typing import Optional

from dotenv import load_dotenv
import psutil

# .env in the working directory wins only where the environment is silent
load_dotenv(override=False)


class Settings:
    """Simple settings class read from the environment"""

    def __init__(self):
        # Logging
        self.log_level = os.getenv("THZRF_LOG_LEVEL", "INFO").upper()

        # Parallelism
        self.workers = self._parse_workers(os.getenv("THZRF_WORKERS"))

        # Mellin-Barnes quadrature
        self.contour_decay_threshold = 1e-16
        self.contour_max_half_length = 2000.0
        self.contour_min_nodes = 64
        self.contour_tolerance = 1e-10
        self.contour_max_halvings = 6
        self.node_budget = 500_000_000
        self.imag_rel_tol = 1e-8
        self.imag_abs_tol = 1e-12

        # Series evaluation
        self.series_max_terms = 20000
        self.series_stagnation = 1e-16

        # Oracle quadrature
        self.oracle_epsabs = 1e-14
        self.oracle_epsrel = 1e-10
        self.oracle_limit = 400

        # Asymptotic pole handling
        self.pole_perturbation = 1e-6

    def _parse_workers(self, raw: Optional[str]) -> int:
        """Worker count from THZRF_WORKERS, else the physical core count"""
        if raw:
            try:
                return max(1, int(raw))
            except ValueError:
                logging.getLogger(__name__).warning(f"Ignoring THZRF_WORKERS={raw!r}")
        cores = psutil.cpu_count(logical=False)
        return cores if cores else 1

    def get_log_level(self) -> int:
        """Numeric log level, INFO when the name is unknown"""
        level = logging.getLevelName(self.log_level)
        return level if isinstance(level, int) else logging.INFO


settings = Settings()
