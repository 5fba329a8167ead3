# distributions/burr.py
from dataclasses import dataclass
from typing import ClassVar, Dict, Tuple

import numpy as np

from distributions.base_distribution import AbstractDistribution


@dataclass(frozen=True)
class BurrXII(AbstractDistribution):
    """
    Burr Type XII with F(x) = 1 - (eta / (eta + x^tau))^lambda on x >= 0.

    `lam` is lambda; the command line also accepts "lambda".
    The quantile inverts this CDF: x = [eta ((1 - p)^(-1/lambda) - 1)]^(1/tau).
    """
    family_name = "burr12"
    param_aliases: ClassVar[Dict[str, str]] = {"lambda": "lam"}

    lam: float
    tau: float
    eta: float

    def __post_init__(self):
        self._require_positive("lam", "tau", "eta")

    @property
    def support(self) -> Tuple[float, float]:
        return 0.0, np.inf

    def _log_sf(self, x):
        return -self.lam * np.log1p(x ** self.tau / self.eta)

    def _pdf(self, x):
        with np.errstate(divide='ignore'):
            return (self.lam * self.tau / self.eta * x ** (self.tau - 1.0)
                    * (1.0 + x ** self.tau / self.eta) ** (-self.lam - 1.0))

    def _cdf(self, x):
        return -np.expm1(self._log_sf(x))

    def _sf(self, x):
        return np.exp(self._log_sf(x))

    def _ppf(self, p):
        return (self.eta * np.expm1(-np.log1p(-p) / self.lam)) ** (1.0 / self.tau)

    def evi(self) -> float:
        return 1.0 / (self.lam * self.tau)
