from .base_distribution import (
    AbstractDistribution,
    pdf,
    cdf,
    quantile,
    sample,
    distribution_from_params,
)
from .strict_pareto import StrictPareto
from .tlpa import TLPa, tlpa_survival_first_order
from .frechet import Frechet
from .burr import BurrXII
from .normal import Normal
