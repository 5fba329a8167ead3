# distributions/base_distribution.py
import abc
import inspect
import logging
from dataclasses import fields
from typing import Any, ClassVar, Dict, Mapping, Optional, Tuple, Type, Union

import numpy as np

from services.errors import SupportError, TlpaInputError
from services.models import Sample

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class AbstractDistribution(abc.ABC):
    """
    Abstract base class for the distribution families used by the threshold tools.

    Concrete families are frozen dataclasses holding their parameters. They
    register themselves by their `family_name` class attribute so that
    `distribution_from_params` can build them from command-line pairs. They must
    also be imported in distributions/__init__.py.

    All evaluation methods accept a scalar or a numpy array and return the same
    shape. Points outside the support (or NaN) raise SupportError instead of
    returning 0 or 1.
    """
    _registry: ClassVar[Dict[str, Type['AbstractDistribution']]] = {}

    family_name: ClassVar[Optional[str]] = None
    # Parameter spellings accepted on the command line that differ from field names.
    param_aliases: ClassVar[Dict[str, str]] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        name = getattr(cls, 'family_name', None)
        if name and not inspect.isabstract(cls):
            existing = AbstractDistribution._registry.get(name)
            if existing is not None and existing.__name__ != cls.__name__:
                logger.warning(f"Family name '{name}' already registered by {existing.__name__}. Overwriting with {cls.__name__}")
            AbstractDistribution._registry[name] = cls
            logger.debug(f"Registered distribution family: {name} -> {cls.__name__}")

    @classmethod
    def get_family_class(cls, family_name: str) -> Optional[Type['AbstractDistribution']]:
        return cls._registry.get(family_name)

    @classmethod
    def family_names(cls) -> Tuple[str, ...]:
        return tuple(sorted(cls._registry))

    # --- Parameters ---

    def _require_positive(self, *names: str):
        for name in names:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise TlpaInputError(f"{type(self).__name__} parameter '{name}' must be positive and finite, got {value}")

    def params(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def describe(self) -> str:
        inner = ",".join(f"{k}={v:g}" for k, v in self.params().items())
        return f"{self.family_name}({inner})"

    # --- Support ---

    @property
    @abc.abstractmethod
    def support(self) -> Tuple[float, float]:
        """(lower, upper) endpoints of the support; the lower endpoint itself is included."""

    def _check_support(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        lower, _ = self.support
        bad = np.isnan(arr) | (arr < lower)
        if np.any(bad):
            first = arr[bad].flat[0] if arr.ndim else float(arr)
            raise SupportError(f"{self.describe()}: {first} lies outside the support [{lower}, inf)", value=first)
        return arr

    @staticmethod
    def _check_probability(p) -> np.ndarray:
        arr = np.asarray(p, dtype=float)
        bad = ~((arr > 0.0) & (arr < 1.0))
        if np.any(bad):
            first = arr[bad].flat[0] if arr.ndim else float(arr)
            raise SupportError(f"Quantile level must lie in (0, 1), got {first}", value=first)
        return arr

    @staticmethod
    def _shaped(result: np.ndarray, like) -> ArrayLike:
        return float(result) if np.ndim(like) == 0 else result

    # --- Family formulas (unchecked, vectorised) ---

    @abc.abstractmethod
    def _pdf(self, x: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def _cdf(self, x: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def _sf(self, x: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def _ppf(self, p: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def evi(self) -> float:
        """The extreme value index of the family."""

    # --- Public surface ---

    def pdf(self, x: ArrayLike) -> ArrayLike:
        arr = self._check_support(x)
        with np.errstate(divide='ignore'):
            return self._shaped(self._pdf(arr), x)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        return self._shaped(self._cdf(self._check_support(x)), x)

    def survival(self, x: ArrayLike) -> ArrayLike:
        return self._shaped(self._sf(self._check_support(x)), x)

    def quantile(self, p: ArrayLike) -> ArrayLike:
        return self._shaped(self._ppf(self._check_probability(p)), p)

    def log_quantile(self, p: ArrayLike) -> ArrayLike:
        """log of the quantile; families with heavy tails override this to avoid overflow near p = 1."""
        return self._shaped(np.log(self._ppf(self._check_probability(p))), p)

    def _draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # Inverse transform. random() lies in [0, 1); 0 is mapped to the smallest positive double.
        p = rng.random(n)
        p[p == 0.0] = np.finfo(float).tiny
        return self._ppf(p)

    def sample(self, n: int, seed: int) -> Sample:
        if int(n) < 1:
            raise TlpaInputError(f"Sample size must be at least 1, got {n}")
        rng = np.random.default_rng(int(seed))
        return Sample(values=self._draw(rng, int(n)), seed=int(seed), source=self.describe())


# --- Functional surface ---

def pdf(spec: AbstractDistribution, y: ArrayLike) -> ArrayLike:
    return spec.pdf(y)


def cdf(spec: AbstractDistribution, y: ArrayLike) -> ArrayLike:
    return spec.cdf(y)


def quantile(spec: AbstractDistribution, p: ArrayLike) -> ArrayLike:
    return spec.quantile(p)


def sample(spec: AbstractDistribution, n: int, seed: int) -> Sample:
    return spec.sample(n, seed)


def distribution_from_params(family_name: str, params: Mapping[str, Any]) -> AbstractDistribution:
    """
    Builds a registered family from name/value pairs, e.g. ("tlpa", {"alpha": "2", "gamma": "1"}).

    Raises:
        TlpaInputError: unknown family, unknown or missing parameter, non-numeric value,
                        or a value the family rejects.
    """
    family_cls = AbstractDistribution.get_family_class(family_name)
    if family_cls is None:
        raise TlpaInputError(
            f"Unknown distribution family '{family_name}'. Known families: {', '.join(AbstractDistribution.family_names())}")
    field_names = {f.name for f in fields(family_cls)}
    kwargs: Dict[str, float] = {}
    for key, raw in params.items():
        name = family_cls.param_aliases.get(key, key)
        if name not in field_names:
            raise TlpaInputError(f"Family '{family_name}' has no parameter '{key}' (expected {', '.join(sorted(field_names))})")
        try:
            kwargs[name] = float(raw)
        except (TypeError, ValueError) as e:
            raise TlpaInputError(f"Parameter '{key}' of '{family_name}' is not a number: {raw!r}", original_exception=e)
    missing = field_names - kwargs.keys()
    if missing:
        raise TlpaInputError(f"Family '{family_name}' is missing parameter(s): {', '.join(sorted(missing))}")
    return family_cls(**kwargs)
