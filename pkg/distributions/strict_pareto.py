# distributions/strict_pareto.py
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from distributions.base_distribution import AbstractDistribution, ArrayLike

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StrictPareto(AbstractDistribution):
    """Strict Pareto on y >= 1: survival y^(-gamma), EVI 1/gamma."""
    family_name = "strict_pareto"

    gamma: float

    def __post_init__(self):
        self._require_positive("gamma")

    @property
    def support(self) -> Tuple[float, float]:
        return 1.0, np.inf

    def _pdf(self, y):
        return self.gamma * y ** (-self.gamma - 1.0)

    def _cdf(self, y):
        return -np.expm1(-self.gamma * np.log(y))

    def _sf(self, y):
        return np.exp(-self.gamma * np.log(y))

    def _log_ppf(self, p):
        return -np.log1p(-p) / self.gamma

    def _ppf(self, p):
        return np.exp(self._log_ppf(p))

    def log_quantile(self, p: ArrayLike) -> ArrayLike:
        return self._shaped(self._log_ppf(self._check_probability(p)), p)

    def evi(self) -> float:
        return 1.0 / self.gamma
