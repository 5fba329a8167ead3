# services/posterior.py
import logging
from typing import Sequence

import numpy as np
from scipy import integrate

from services.errors import TlpaInputError, TlpaNumericError, InsufficientTailError, DegenerateExcessError
from services.models import ExceedanceSample, GammaParams, InvGammaParams, SPFit

logger = logging.getLogger(__name__)

LN2 = float(np.log(2.0))
DEGENERATE_FLOOR = 1e-300


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise TlpaInputError(f"{name} must be positive and finite, got {value}")
    return value


# --- Excesses ---

def make_excesses(data: Sequence[float], rank: int) -> ExceedanceSample:
    """
    Relative excesses above the rank-th smallest observation (1-based).

    Observations equal to the threshold are not exceedances.

    Raises:
        TlpaInputError: data not sorted ascending, rank outside [1, len(data) - 2],
                        or a nonpositive threshold.
        InsufficientTailError: fewer than 2 strict exceedances (ties at the top).
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 1:
        raise TlpaInputError("Data must be one-dimensional")
    if np.any(np.diff(arr) < 0):
        raise TlpaInputError("Data must be sorted ascending")
    rank = int(rank)
    if not 1 <= rank <= arr.size - 2:
        raise TlpaInputError(f"Threshold rank must lie in [1, {arr.size - 2}], got {rank}")
    u = float(arr[rank - 1])
    if not u > 0:
        raise TlpaInputError(f"Threshold at rank {rank} is {u}; relative excesses need a positive threshold")
    exceedances = arr[arr > u]
    if exceedances.size < 2:
        raise InsufficientTailError(rank=rank, n_exceed=int(exceedances.size))
    return ExceedanceSample(y=exceedances / u, u=u, rank=rank)


# --- Strict Pareto ---

def sp_posterior(s: ExceedanceSample) -> SPFit:
    """Gamma(n, S) posterior of the SP tail exponent under the Jeffreys prior."""
    posterior = GammaParams(shape=float(s.n), rate=s.log_sum)
    return SPFit(posterior=posterior, gamma_hat=s.n / s.log_sum, evi=s.log_sum / s.n)


def sp_evi_posterior(fit: SPFit) -> InvGammaParams:
    return InvGammaParams(shape=fit.posterior.shape, rate_sum=fit.posterior.rate)


# --- TLPa ---

def log_one_minus_pow(log_y: np.ndarray, gamma: float) -> np.ndarray:
    """log(1 - y^(-2 gamma)) per excess, from log y.

    Raises:
        DegenerateExcessError: 1 - y^(-2 gamma) falls below 1e-300 for some excess.
    """
    z = 2.0 * gamma * np.asarray(log_y, dtype=float)
    if np.min(z) <= 0 or -np.expm1(-np.min(z)) < DEGENERATE_FLOOR:
        raise DegenerateExcessError(gamma=gamma)
    with np.errstate(divide='ignore'):
        return np.where(z > LN2, np.log1p(-np.exp(-z)), np.log(-np.expm1(-z)))


def log_one_minus_pow_sum(gamma: float, s: ExceedanceSample) -> float:
    """T(gamma) = sum(log(1 - y_i^(-2 gamma))), always negative."""
    return float(np.sum(log_one_minus_pow(s.log_y, gamma)))


def _alpha_rate(gamma: float, s: ExceedanceSample) -> float:
    rate = -log_one_minus_pow_sum(gamma, s)
    if not rate > 0:
        # every y_i^(-2 gamma) underflowed against 1
        raise DegenerateExcessError("degenerate excess: 1 - y^(-2 gamma) rounds to 1 for every excess", gamma=gamma)
    return rate


def tlpa_log_joint(gamma: float, alpha: float, s: ExceedanceSample) -> float:
    """Unnormalised log joint posterior of (alpha, gamma) under independent Jeffreys priors."""
    gamma = _check_positive("gamma", gamma)
    alpha = _check_positive("alpha", alpha)
    n = s.n
    t_sum = log_one_minus_pow_sum(gamma, s)
    return ((n - 1) * np.log(alpha) + (n - 1) * np.log(gamma)
            - (2.0 * gamma + 1.0) * s.log_sum + (alpha - 1.0) * t_sum)


def alpha_conditional(gamma: float, s: ExceedanceSample) -> GammaParams:
    """Exact conditional of alpha given gamma: Gamma(n, -T(gamma))."""
    gamma = _check_positive("gamma", gamma)
    return GammaParams(shape=float(s.n), rate=_alpha_rate(gamma, s))


def gamma_conditional_approx(alpha: float, s: ExceedanceSample) -> GammaParams:
    """Gamma(n alpha, 2S): the gamma conditional with log(1 - y^(-2 gamma)) replaced by its first-order term."""
    alpha = _check_positive("alpha", alpha)
    return GammaParams(shape=s.n * alpha, rate=2.0 * s.log_sum)


def tlpa_evi_conditional(alpha: float, s: ExceedanceSample) -> InvGammaParams:
    """EVI 1/(2 gamma) given alpha, with gamma ~ Gamma(n alpha, 2S)."""
    alpha = _check_positive("alpha", alpha)
    return InvGammaParams(shape=s.n * alpha, rate_sum=s.log_sum)


def expected_alpha(gamma: float, s: ExceedanceSample) -> float:
    """E(alpha | gamma, y) = n / (-T(gamma)); strictly increasing in gamma."""
    gamma = _check_positive("gamma", gamma)
    return s.n / _alpha_rate(gamma, s)


def expected_alpha_grid(gammas: np.ndarray, s: ExceedanceSample) -> np.ndarray:
    """
    expected_alpha over many gamma values at once.

    Entries whose gamma makes some excess degenerate (or rounds every term to 0)
    are NaN instead of raising.
    """
    gammas = np.asarray(gammas, dtype=float)
    z = 2.0 * gammas[:, None] * s.log_y[None, :]
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        terms = np.where(z > LN2, np.log1p(-np.exp(-z)), np.log(-np.expm1(-z)))
        rates = -np.sum(terms, axis=1)
        degenerate = -np.expm1(-z.min(axis=1)) < DEGENERATE_FLOOR
        result = s.n / rates
    result[degenerate | ~(rates > 0) | ~np.isfinite(result)] = np.nan
    return result


# --- Diagnostics ---

def taylor_log_ratio(gamma: float, alpha: float, s: ExceedanceSample) -> np.ndarray:
    """
    Per-excess log-ratio of the exact gamma-conditional kernel to the Gamma(n alpha, 2S) kernel,
    (alpha - 1) [log(1 - y_i^(-2 gamma)) - log(2 gamma log y_i)], up to a constant in gamma.

    Tends to 0 as every y_i tends to 1 from above.
    """
    gamma = _check_positive("gamma", gamma)
    alpha = _check_positive("alpha", alpha)
    return (alpha - 1.0) * (log_one_minus_pow(s.log_y, gamma) - np.log(2.0 * gamma * s.log_y))


def exact_gamma_conditional_mean(alpha: float, s: ExceedanceSample) -> float:
    """
    Mean of the exact gamma conditional, proportional to gamma^(n-1) exp(-2 gamma S) exp((alpha - 1) T(gamma)),
    by numerical quadrature. Used to check the Gamma(n alpha, 2S) approximation.
    """
    alpha = _check_positive("alpha", alpha)
    approx = gamma_conditional_approx(alpha, s)
    centre = approx.mean()
    upper = centre + 40.0 * np.sqrt(approx.var())

    def log_kernel(g: float) -> float:
        return (s.n - 1) * np.log(g) - 2.0 * g * s.log_sum + (alpha - 1.0) * log_one_minus_pow_sum(g, s)

    log_ref = log_kernel(centre)

    def kernel(g: float) -> float:
        if g <= 0:
            return 0.0
        try:
            return float(np.exp(log_kernel(g) - log_ref))
        except DegenerateExcessError:
            return 0.0

    opts = dict(points=[centre], limit=200)
    mass, _ = integrate.quad(kernel, 0.0, upper, **opts)
    first, _ = integrate.quad(lambda g: g * kernel(g), 0.0, upper, **opts)
    if not mass > 0:
        raise TlpaNumericError("exact gamma conditional could not be normalised")
    logger.debug(f"[Posterior] exact gamma conditional mean {first / mass:.6g} vs approximation {centre:.6g}")
    return first / mass
