from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Any, Dict, Type, Union, TYPE_CHECKING

import numpy as np
import pandas as pd
from scipy import stats

from services.errors import TlpaInputError, MeanUndefinedError

if TYPE_CHECKING:
    from distributions.base_distribution import AbstractDistribution


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _check_level(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise TlpaInputError(f"Credible level must lie in (0, 1), got {level}")
    return float(level)


# --- Samples ---

@dataclass(frozen=True)
class Sample:
    """
    Draws from one distribution family.

    Attributes:
        values (np.ndarray): The draws, in generation order. Read-only.
        seed (Optional[int]): The 64-bit seed the draws were generated from, if any.
        source (str): Short description of the generator, e.g. "frechet(gamma=2)".
    """
    values: np.ndarray
    seed: Optional[int] = None
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen_array(self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ExceedanceSample:
    """
    Relative excesses y_i = x_i / u of the strict exceedances above a threshold u.

    `log_sum` is S = sum(log y_i), cached once; it is the only statistic shared
    across the gamma values a selection grid visits.

    Attributes:
        y (np.ndarray): Relative excesses, each strictly greater than 1, ascending.
        log_y (np.ndarray): log(y), same order.
        log_sum (float): S = sum(log_y).
        u (Optional[float]): The threshold value, when built from data.
        rank (Optional[int]): 1-based position of u in the ascending data, when built from data.
    """
    y: np.ndarray
    log_y: np.ndarray = field(init=False, repr=False)
    log_sum: float = field(init=False)
    u: Optional[float] = None
    rank: Optional[int] = None

    def __post_init__(self):
        y = np.sort(np.asarray(self.y, dtype=float))
        if y.ndim != 1 or y.size == 0:
            raise TlpaInputError("An exceedance sample needs at least one excess")
        if not np.all(np.isfinite(y)) or np.any(y <= 1.0):
            raise TlpaInputError("Relative excesses must be finite and strictly greater than 1")
        log_y = np.log(y)
        object.__setattr__(self, 'y', _frozen_array(y))
        object.__setattr__(self, 'log_y', _frozen_array(log_y))
        object.__setattr__(self, 'log_sum', float(np.sum(log_y)))

    @property
    def n(self) -> int:
        return int(self.y.size)

    @classmethod
    def from_excesses(cls: Type['ExceedanceSample'], y) -> 'ExceedanceSample':
        """Builds a sample from values already on the relative scale (no threshold attached)."""
        return cls(y=y)


# --- Closed-form posteriors ---

@dataclass(frozen=True)
class GammaParams:
    """Gamma(shape, rate) with density proportional to x^(shape-1) exp(-rate x)."""
    shape: float
    rate: float

    def __post_init__(self):
        if not (np.isfinite(self.shape) and np.isfinite(self.rate)) or self.shape <= 0 or self.rate <= 0:
            raise TlpaInputError(f"Gamma parameters must be positive and finite, got shape={self.shape}, rate={self.rate}")

    def mean(self) -> float:
        return self.shape / self.rate

    def var(self) -> float:
        return self.shape / self.rate ** 2

    def frozen(self):
        return stats.gamma(a=self.shape, scale=1.0 / self.rate)

    def interval(self, level: float = 0.95) -> Tuple[float, float]:
        """Equal-tailed credible interval."""
        lo, hi = self.frozen().interval(_check_level(level))
        return float(lo), float(hi)

    def logpdf(self, x):
        return self.frozen().logpdf(x)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size=size)


@dataclass(frozen=True)
class InvGammaParams:
    """
    Distribution of 1/G where G ~ Gamma(shape, rate=rate_sum).

    `rate_sum` is the Gamma rate of the reciprocal variable, which is also the
    scale of the inverse-gamma itself.
    """
    shape: float
    rate_sum: float

    def __post_init__(self):
        if not (np.isfinite(self.shape) and np.isfinite(self.rate_sum)) or self.shape <= 0 or self.rate_sum <= 0:
            raise TlpaInputError(f"Inverse-gamma parameters must be positive and finite, got shape={self.shape}, rate_sum={self.rate_sum}")

    def mean(self) -> float:
        if self.shape <= 1:
            raise MeanUndefinedError(shape=self.shape)
        return self.rate_sum / (self.shape - 1)

    def var(self) -> float:
        if self.shape <= 2:
            raise MeanUndefinedError("variance undefined", shape=self.shape)
        return self.rate_sum ** 2 / ((self.shape - 1) ** 2 * (self.shape - 2))

    def interval(self, level: float = 0.95) -> Tuple[float, float]:
        lo, hi = stats.invgamma(a=self.shape, scale=self.rate_sum).interval(_check_level(level))
        return float(lo), float(hi)

    def sample(self, rng: np.random.Generator, size=None):
        return 1.0 / rng.gamma(self.shape, 1.0 / self.rate_sum, size=size)


@dataclass(frozen=True)
class SPFit:
    """Strict Pareto fit at one threshold: the Gamma posterior of gamma and its mean."""
    posterior: GammaParams
    gamma_hat: float
    evi: float

    def interval(self, level: float = 0.95) -> Tuple[float, float]:
        return self.posterior.interval(level)

    def evi_interval(self, level: float = 0.95) -> Tuple[float, float]:
        return InvGammaParams(self.posterior.shape, self.posterior.rate).interval(level)


# --- Gibbs sampling ---

@dataclass(frozen=True)
class GibbsConfig:
    """
    Settings of one Gibbs chain.

    Attributes:
        n_pairs (int): Number of (alpha*, gamma*) pairs to draw.
        gamma_init (Optional[float]): Starting gamma. None means the SP posterior mean n/S.
        burn_in (int): Leading pairs dropped before averaging.
        seed (int): 64-bit seed of the chain's generator.
    """
    n_pairs: int = 2000
    gamma_init: Optional[float] = None
    burn_in: int = 0
    seed: int = 0

    def __post_init__(self):
        if int(self.n_pairs) < 1:
            raise TlpaInputError(f"n_pairs must be at least 1, got {self.n_pairs}")
        if int(self.burn_in) < 0 or int(self.burn_in) >= int(self.n_pairs):
            raise TlpaInputError(f"burn_in must satisfy 0 <= burn_in < n_pairs, got {self.burn_in} (n_pairs={self.n_pairs})")
        if self.gamma_init is not None and not (np.isfinite(self.gamma_init) and self.gamma_init > 0):
            raise TlpaInputError(f"gamma_init must be positive, got {self.gamma_init}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise TlpaInputError(f"Seed must be an unsigned 64-bit integer, got {self.seed}")

    def with_seed(self, seed: int) -> 'GibbsConfig':
        return GibbsConfig(n_pairs=self.n_pairs, gamma_init=self.gamma_init, burn_in=self.burn_in, seed=seed)


@dataclass(frozen=True)
class Chain:
    alphas: np.ndarray
    gammas: np.ndarray
    config: GibbsConfig

    def __post_init__(self):
        object.__setattr__(self, 'alphas', _frozen_array(self.alphas))
        object.__setattr__(self, 'gammas', _frozen_array(self.gammas))
        if self.alphas.shape != self.gammas.shape:
            raise TlpaInputError("Chain alpha and gamma arrays differ in length")

    def __len__(self) -> int:
        return int(self.alphas.size)

    @property
    def pairs(self) -> List[Tuple[float, float]]:
        return list(zip(self.alphas.tolist(), self.gammas.tolist()))


@dataclass(frozen=True)
class TLPaFit:
    """
    TLPa estimates at one threshold: chain means of alpha and gamma and the EVI 1/(2 gamma_hat).

    The standard deviations are taken over the same post-burn-in pairs as the means.
    """
    alpha_hat: float
    gamma_hat: float
    evi: float
    alpha_sd: float = float('nan')
    gamma_sd: float = float('nan')

    @classmethod
    def from_estimates(cls, alpha_hat: float, gamma_hat: float,
                       alpha_sd: float = float('nan'), gamma_sd: float = float('nan')) -> 'TLPaFit':
        return cls(alpha_hat=float(alpha_hat), gamma_hat=float(gamma_hat),
                   evi=1.0 / (2.0 * float(gamma_hat)), alpha_sd=float(alpha_sd), gamma_sd=float(gamma_sd))


# --- Threshold scan and selection ---

@dataclass(frozen=True)
class ThresholdRow:
    rank: int
    u: float
    n_exceed: int
    evi_sp: float
    evi_tlpa: float
    alpha_hat: float


@dataclass
class ThresholdCurve:
    """
    One row per scanned threshold rank.

    Attributes:
        rows (List[ThresholdRow]): Successful rows, ranks strictly increasing.
        skipped (List[Tuple[int, str]]): (rank, reason) for ranks whose excesses could not be built or fitted.
    """
    COLUMNS = ("rank", "u", "n_exceed", "evi_sp", "evi_tlpa", "alpha_hat")

    rows: List[ThresholdRow] = field(default_factory=list)
    skipped: List[Tuple[int, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        if name not in self.COLUMNS:
            raise KeyError(name)
        return np.array([getattr(row, name) for row in self.rows])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([[getattr(row, c) for c in self.COLUMNS] for row in self.rows],
                             columns=list(self.COLUMNS))
        return frame.astype({"rank": "int64", "n_exceed": "int64"})


@dataclass(frozen=True)
class SelectionGrid:
    gamma_grid: np.ndarray
    rank_grid: np.ndarray

    def __post_init__(self):
        gammas = _frozen_array(self.gamma_grid)
        ranks = _frozen_array(self.rank_grid, dtype=np.int64)
        if gammas.ndim != 1 or gammas.size == 0 or ranks.ndim != 1 or ranks.size == 0:
            raise TlpaInputError("Selection grids must be nonempty one-dimensional sequences")
        if np.any(~np.isfinite(gammas)) or np.any(gammas <= 0) or np.any(np.diff(gammas) <= 0):
            raise TlpaInputError("gamma_grid must be strictly increasing and positive")
        if np.any(ranks < 1) or np.any(np.diff(ranks) <= 0):
            raise TlpaInputError("rank_grid must be strictly increasing 1-based ranks")
        object.__setattr__(self, 'gamma_grid', gammas)
        object.__setattr__(self, 'rank_grid', ranks)

    @classmethod
    def default(cls, n_obs: int, min_exceedances: int = 10, rank_start_quantile: float = 0.5,
                gamma_min: float = 0.05, gamma_max: float = 10.0, gamma_size: int = 200) -> 'SelectionGrid':
        """Ranks from the rank_start_quantile point of the data to n - min_exceedances; gamma log-spaced."""
        if gamma_min <= 0 or gamma_max <= gamma_min or gamma_size < 1:
            raise TlpaInputError(f"Invalid gamma grid [{gamma_min}, {gamma_max}] x {gamma_size}")
        first = max(1, int(np.ceil(rank_start_quantile * n_obs)))
        last = int(n_obs) - int(min_exceedances)
        if last < first:
            raise TlpaInputError(
                f"No threshold rank leaves {min_exceedances} exceedances from rank {first} on (n={n_obs})")
        gammas = np.logspace(np.log10(gamma_min), np.log10(gamma_max), int(gamma_size)) if gamma_size > 1 \
            else np.array([gamma_min], dtype=float)
        return cls(gamma_grid=gammas, rank_grid=np.arange(first, last + 1))


@dataclass(frozen=True)
class Selection:
    """
    A selected threshold.

    Attributes:
        gamma_sharp (float): Selected TLPa gamma.
        rank_sharp (int): 1-based rank of the selected threshold in the ascending data.
        u_sharp (float): The selected threshold value.
        evi (float): 1 / (2 gamma_sharp).
        loss (float): (E(alpha | gamma_sharp, y) - 1)^2 at the selected rank.
        n_exceed (int): Number of strict exceedances above u_sharp.
        strategy (str): "grid" or "profile".
    """
    COLUMNS = ("gamma_sharp", "rank", "u", "evi", "loss")

    gamma_sharp: float
    rank_sharp: int
    u_sharp: float
    evi: float
    loss: float
    n_exceed: int = 0
    strategy: str = "grid"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([[self.gamma_sharp, self.rank_sharp, self.u_sharp, self.evi, self.loss]],
                            columns=list(self.COLUMNS))


# --- Experiments ---

@dataclass(frozen=True)
class Mixture:
    """A normal-like body joined with a Strict Pareto tail spliced at the body maximum."""
    body: 'AbstractDistribution'
    n_body: int
    tail: 'AbstractDistribution'
    n_tail: int

    def __post_init__(self):
        if self.n_body < 1 or self.n_tail < 1:
            raise TlpaInputError("Mixture blocks must each contain at least one observation")

    @property
    def n_obs(self) -> int:
        return self.n_body + self.n_tail

    def describe(self) -> str:
        return f"mixture({self.body.describe()} x {self.n_body} + {self.tail.describe()} x {self.n_tail})"


@dataclass(frozen=True)
class ExperimentSpec:
    """
    A reproducible Monte Carlo experiment.

    `kind` is "case" for a per-repetition threshold scan and "selection" for a
    per-repetition threshold selection. `rank_range` bounds the scanned ranks
    (inclusive); None scans every valid rank.
    """
    name: str
    generator: Union['AbstractDistribution', Mixture]
    n_obs: int
    kind: str = "case"
    repetitions: int = 1000
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    grid: Optional[SelectionGrid] = None
    master_seed: int = 0
    rank_range: Optional[Tuple[int, int]] = None
    strategy: str = "grid"
    workers: int = 1
    failure_tolerance: float = 0.01

    def __post_init__(self):
        if self.n_obs < 20:
            raise TlpaInputError(f"Experiments need at least 20 observations, got {self.n_obs}")
        if self.repetitions < 1:
            raise TlpaInputError(f"repetitions must be at least 1, got {self.repetitions}")
        if self.kind not in ("case", "selection"):
            raise TlpaInputError(f"Unknown experiment kind '{self.kind}'")
        if self.strategy not in ("grid", "profile"):
            raise TlpaInputError(f"Unknown selection strategy '{self.strategy}'")
        if isinstance(self.generator, Mixture) and self.generator.n_obs != self.n_obs:
            raise TlpaInputError(
                f"Mixture holds {self.generator.n_obs} observations but n_obs is {self.n_obs}")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise TlpaInputError(f"Seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if self.workers < 1:
            raise TlpaInputError(f"workers must be at least 1, got {self.workers}")
        if self.rank_range is not None:
            first, last = self.rank_range
            if not 1 <= first <= last <= self.n_obs - 2:
                raise TlpaInputError(f"rank_range must lie within [1, {self.n_obs - 2}], got [{first}, {last}]")

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "generator": self.generator.describe(),
            "n_obs": self.n_obs,
            "kind": self.kind,
            "repetitions": self.repetitions,
            "n_pairs": self.gibbs.n_pairs,
            "burn_in": self.gibbs.burn_in,
            "master_seed": self.master_seed,
            "strategy": self.strategy,
        }


@dataclass
class RepetitionRecord:
    repetition: int
    seed: int
    curve: Optional[ThresholdCurve] = None
    selection: Optional[Selection] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class ExperimentResult:
    """
    Output of one experiment run.

    Attributes:
        spec (ExperimentSpec): The experiment that was run.
        records (List[RepetitionRecord]): One record per repetition, in repetition order.
        curve (Optional[pd.DataFrame]): Repetition-averaged threshold curve (scan experiments),
            columns ThresholdCurve.COLUMNS plus "n_repetitions".
        mean_rank (Optional[float]): Mean selected rank over successful repetitions (selection experiments).
        mean_evi (Optional[float]): Mean selected EVI over successful repetitions (selection experiments).
        wall_time (float): Seconds spent running the repetitions.
    """
    spec: ExperimentSpec
    records: List[RepetitionRecord]
    curve: Optional[pd.DataFrame] = None
    mean_rank: Optional[float] = None
    mean_evi: Optional[float] = None
    wall_time: float = 0.0

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.records if r.failed)

    def selections_frame(self) -> pd.DataFrame:
        rows = [[r.repetition, r.seed, r.selection.rank_sharp, r.selection.u_sharp,
                 r.selection.gamma_sharp, r.selection.evi, r.selection.loss]
                for r in self.records if r.selection is not None]
        return pd.DataFrame(rows, columns=["repetition", "seed", "rank", "u", "gamma_sharp", "evi", "loss"])

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame([[self.spec.name, self.spec.strategy, len(self.records) - self.n_failed,
                              self.n_failed, self.mean_rank, self.mean_evi]],
                            columns=["experiment", "strategy", "repetitions", "failed", "mean_rank", "mean_evi"])


# --- Data files and reports ---

@dataclass(frozen=True)
class Dataset:
    name: str
    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.size == 0:
            raise TlpaInputError(f"Dataset '{self.name}' is empty")
        if not np.all(np.isfinite(values)):
            raise TlpaInputError(f"Dataset '{self.name}' contains non-finite values")
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return int(self.values.size)

    def sorted_values(self) -> np.ndarray:
        return np.sort(self.values)


@dataclass(frozen=True)
class QQTable:
    """Log sorted observations against log SP and log TLPa quantiles, one row per exceedance."""
    COLUMNS = ("log_sorted_obs", "log_q_sp", "log_q_tlpa")

    log_sorted_obs: np.ndarray
    log_q_sp: np.ndarray
    log_q_tlpa: np.ndarray

    def __post_init__(self):
        for name in self.COLUMNS:
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))

    def __len__(self) -> int:
        return int(self.log_sorted_obs.size)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({name: getattr(self, name) for name in self.COLUMNS})
