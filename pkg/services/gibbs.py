# services/gibbs.py
import logging
import time

import numpy as np
from numba import njit

from services.errors import DegenerateExcessError
from services.models import Chain, ExceedanceSample, GibbsConfig, TLPaFit
from services.posterior import LN2, DEGENERATE_FLOOR

logger = logging.getLogger(__name__)


@njit
def _gibbs_kernel(log_y, log_sum, n_pairs, gamma_init, rng):
    """
    Alternates alpha* ~ Gamma(n, -T(gamma)) and gamma* ~ Gamma(n alpha*, 2S).

    Returns (alphas, gammas, failed_at). failed_at is -1 for a full chain, otherwise the
    index of the pair whose alpha draw hit a degenerate T(gamma); entries from that
    index on are then unset.
    """
    n = log_y.size
    n_float = n * 1.0
    alphas = np.empty(n_pairs)
    gammas = np.empty(n_pairs)
    gamma = gamma_init
    gamma_scale = 1.0 / (2.0 * log_sum)
    for i in range(n_pairs):
        rate = 0.0
        for j in range(n):
            z = 2.0 * gamma * log_y[j]
            if z > LN2:
                rate -= np.log1p(-np.exp(-z))
            else:
                one_minus = -np.expm1(-z)
                if one_minus < DEGENERATE_FLOOR:
                    return alphas, gammas, i
                rate -= np.log(one_minus)
        if not rate > 0.0:
            return alphas, gammas, i
        alpha = rng.gamma(n_float, 1.0 / rate)
        gamma = rng.gamma(n_float * alpha, gamma_scale)
        alphas[i] = alpha
        gammas[i] = gamma
    return alphas, gammas, -1


def run_chain(s: ExceedanceSample, cfg: GibbsConfig) -> Chain:
    """
    Draws cfg.n_pairs (alpha*, gamma*) pairs for the excesses in `s`.

    The chain starts from cfg.gamma_init, or the SP posterior mean n/S when unset.
    Identical (s, cfg) give identical chains.

    Raises:
        DegenerateExcessError: a drawn gamma made 1 - y^(-2 gamma) underflow. The chain
                               is never returned truncated.
    """
    gamma_init = cfg.gamma_init if cfg.gamma_init is not None else s.n / s.log_sum
    rng = np.random.default_rng(int(cfg.seed))
    started = time.perf_counter()
    alphas, gammas, failed_at = _gibbs_kernel(
        np.ascontiguousarray(s.log_y, dtype=np.float64), float(s.log_sum), int(cfg.n_pairs), float(gamma_init), rng)
    if failed_at >= 0:
        last_gamma = float(gammas[failed_at - 1]) if failed_at > 0 else float(gamma_init)
        logger.warning(f"[Gibbs] Chain failed at pair {failed_at} of {cfg.n_pairs} (gamma={last_gamma:.3g}, n={s.n})")
        raise DegenerateExcessError(gamma=last_gamma)
    logger.debug(f"[Gibbs] {cfg.n_pairs} pairs for n={s.n} in {time.perf_counter() - started:.3f}s")
    return Chain(alphas=alphas, gammas=gammas, config=cfg)


def fit_from_chain(chain: Chain) -> TLPaFit:
    """Posterior means (and standard deviations) of alpha and gamma over the pairs after burn-in."""
    kept_alpha = chain.alphas[chain.config.burn_in:]
    kept_gamma = chain.gammas[chain.config.burn_in:]
    if kept_alpha.size > 1:
        alpha_sd, gamma_sd = float(np.std(kept_alpha, ddof=1)), float(np.std(kept_gamma, ddof=1))
    else:
        alpha_sd = gamma_sd = float('nan')
    return TLPaFit.from_estimates(float(np.mean(kept_alpha)), float(np.mean(kept_gamma)), alpha_sd, gamma_sd)


def estimate_tlpa(s: ExceedanceSample, cfg: GibbsConfig) -> TLPaFit:
    return fit_from_chain(run_chain(s, cfg))
