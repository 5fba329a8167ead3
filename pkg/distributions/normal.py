# distributions/normal.py
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special

from distributions.base_distribution import AbstractDistribution
from services.errors import TlpaInputError


@dataclass(frozen=True)
class Normal(AbstractDistribution):
    """Normal(mu, sigma2); sigma2 is the variance. Light-tailed, so its EVI is 0."""
    family_name = "normal"

    mu: float
    sigma2: float

    def __post_init__(self):
        if not np.isfinite(self.mu):
            raise TlpaInputError(f"Normal mean must be finite, got {self.mu}")
        self._require_positive("sigma2")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    @property
    def support(self) -> Tuple[float, float]:
        return -np.inf, np.inf

    def _z(self, x):
        return (x - self.mu) / self.sigma

    def _pdf(self, x):
        return np.exp(-0.5 * self._z(x) ** 2) / (self.sigma * np.sqrt(2.0 * np.pi))

    def _cdf(self, x):
        return special.ndtr(self._z(x))

    def _sf(self, x):
        return special.ndtr(-self._z(x))

    def _ppf(self, p):
        return self.mu + self.sigma * special.ndtri(p)

    def _draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.mu + self.sigma * rng.standard_normal(n)

    def evi(self) -> float:
        return 0.0
