# distributions/tlpa.py
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from distributions.base_distribution import AbstractDistribution, ArrayLike
from services.errors import SupportError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TLPa(AbstractDistribution):
    """
    Topp-Leone Pareto on y >= 1 with CDF (1 - y^(-2 gamma))^alpha.

    With alpha = 1 it is the Strict Pareto with tail exponent 2 gamma, and every
    formula below evaluates to exactly the Strict Pareto one in that case.
    The EVI is 1/(2 gamma) for every alpha.
    """
    family_name = "tlpa"

    alpha: float
    gamma: float

    def __post_init__(self):
        self._require_positive("alpha", "gamma")

    @property
    def support(self) -> Tuple[float, float]:
        return 1.0, np.inf

    def _one_minus_t(self, y):
        # 1 - y^(-2 gamma), accurate for y close to 1
        return -np.expm1(-2.0 * self.gamma * np.log(y))

    def _pdf(self, y):
        two_gamma = 2.0 * self.gamma
        return self.alpha * two_gamma * y ** (-two_gamma - 1.0) * self._one_minus_t(y) ** (self.alpha - 1.0)

    def _cdf(self, y):
        return self._one_minus_t(y) ** self.alpha

    def _sf(self, y):
        with np.errstate(divide='ignore'):
            return -np.expm1(self.alpha * np.log1p(-np.exp(-2.0 * self.gamma * np.log(y))))

    def _log_ppf(self, p):
        if self.alpha == 1.0:
            return -np.log1p(-p) / (2.0 * self.gamma)
        # log Q = -log(1 - p^(1/alpha)) / (2 gamma), without forming Q
        return -np.log(-np.expm1(np.log(p) / self.alpha)) / (2.0 * self.gamma)

    def _ppf(self, p):
        return np.exp(self._log_ppf(p))

    def log_quantile(self, p: ArrayLike) -> ArrayLike:
        return self._shaped(self._log_ppf(self._check_probability(p)), p)

    def evi(self) -> float:
        return 1.0 / (2.0 * self.gamma)

    def survival_first_order(self, y: ArrayLike) -> ArrayLike:
        """Two-term expansion of the survival: t (alpha - alpha (alpha - 1) t / 2) with t = y^(-2 gamma), for y > 1."""
        arr = self._check_support(y)
        if np.any(arr == 1.0):
            raise SupportError(f"{self.describe()}: the tail expansion needs y > 1, got 1.0", value=1.0)
        t = np.power(arr, -2.0 * self.gamma)
        return self._shaped(t * (self.alpha - self.alpha * (self.alpha - 1.0) / 2.0 * t), y)


def tlpa_survival_first_order(y: ArrayLike, alpha: float, gamma: float) -> ArrayLike:
    return TLPa(alpha=alpha, gamma=gamma).survival_first_order(y)
