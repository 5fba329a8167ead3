# distributions/frechet.py
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from distributions.base_distribution import AbstractDistribution, ArrayLike


@dataclass(frozen=True)
class Frechet(AbstractDistribution):
    """Standard Frechet, F(x) = exp(-x^(-gamma)) on x >= 0."""
    family_name = "frechet"

    gamma: float

    def __post_init__(self):
        self._require_positive("gamma")

    @property
    def support(self) -> Tuple[float, float]:
        return 0.0, np.inf

    def _neg_log_cdf(self, x):
        with np.errstate(divide='ignore'):
            return x ** (-self.gamma)

    def _pdf(self, x):
        z = self._neg_log_cdf(x)
        with np.errstate(invalid='ignore'):
            dens = self.gamma * z / np.where(x > 0, x, 1.0) * np.exp(-z)
        return np.where(x > 0, dens, 0.0)

    def _cdf(self, x):
        return np.exp(-self._neg_log_cdf(x))

    def _sf(self, x):
        return -np.expm1(-self._neg_log_cdf(x))

    def _ppf(self, p):
        return (-np.log(p)) ** (-1.0 / self.gamma)

    def log_quantile(self, p: ArrayLike) -> ArrayLike:
        arr = self._check_probability(p)
        return self._shaped(-np.log(-np.log(arr)) / self.gamma, p)

    def evi(self) -> float:
        return 1.0 / self.gamma
