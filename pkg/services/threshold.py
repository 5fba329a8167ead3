# services/threshold.py
import logging
from typing import Mapping, Any, Optional, Sequence, Tuple, Union

import numpy as np

from services.errors import (TlpaInputError, InsufficientTailError, DegenerateExcessError,
                             NoFeasibleGridPointError)
from services.gibbs import estimate_tlpa
from services.models import GibbsConfig, Selection, SelectionGrid, ThresholdCurve, ThresholdRow
from services.posterior import expected_alpha, expected_alpha_grid, make_excesses, sp_posterior
from utils.helpers import rank_seed

logger = logging.getLogger(__name__)

SELECTION_STRATEGIES = ("grid", "profile")


def _sorted_data(data: Sequence[float], min_size: int = 4) -> np.ndarray:
    arr = np.sort(np.asarray(data, dtype=float))
    if arr.ndim != 1 or arr.size < min_size:
        raise TlpaInputError(f"Threshold analysis needs at least {min_size} observations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise TlpaInputError("Data contains non-finite values")
    return arr


def _check_ranks(ranks: np.ndarray, n_obs: int):
    if ranks.size and (ranks[0] < 1 or ranks[-1] > n_obs - 2):
        raise TlpaInputError(f"Threshold ranks must lie in [1, {n_obs - 2}], got [{ranks[0]}, {ranks[-1]}]")


def grid_from_config(n_obs: int, config: Mapping[str, Any]) -> SelectionGrid:
    """The default selection grid for `n_obs` observations, sized by the config values."""
    return SelectionGrid.default(
        n_obs,
        min_exceedances=int(config["min_exceedances"]),
        rank_start_quantile=float(config["rank_start_quantile"]),
        gamma_min=float(config["gamma_grid_min"]),
        gamma_max=float(config["gamma_grid_max"]),
        gamma_size=int(config["gamma_grid_size"]),
    )


def scan(data: Sequence[float], rank_range: Optional[Tuple[int, int]] = None,
         gibbs_cfg: Optional[GibbsConfig] = None) -> ThresholdCurve:
    """
    SP and TLPa estimates at every threshold rank in `rank_range` (inclusive, 1-based).

    Each rank's chain is seeded with rank_seed(gibbs_cfg.seed, rank), so a row does not
    depend on which other ranks are scanned. Ranks whose excesses cannot be built or
    fitted are left out of `rows` and listed in `skipped`. Tied observations make
    n_exceed non-increasing rather than strictly decreasing.
    """
    arr = _sorted_data(data)
    cfg = gibbs_cfg or GibbsConfig()
    first, last = rank_range if rank_range is not None else (1, arr.size - 2)
    if first > last:
        raise TlpaInputError(f"Empty rank range [{first}, {last}]")
    _check_ranks(np.array([first, last]), arr.size)

    curve = ThresholdCurve()
    for rank in range(int(first), int(last) + 1):
        try:
            excesses = make_excesses(arr, rank)
            sp = sp_posterior(excesses)
            tlpa = estimate_tlpa(excesses, cfg.with_seed(rank_seed(cfg.seed, rank)))
        except (InsufficientTailError, DegenerateExcessError, TlpaInputError) as e:
            logger.debug(f"[Threshold] Rank {rank} omitted from scan: {e}")
            curve.skipped.append((rank, str(e)))
            continue
        curve.rows.append(ThresholdRow(rank=rank, u=float(excesses.u), n_exceed=excesses.n,
                                       evi_sp=sp.evi, evi_tlpa=tlpa.evi, alpha_hat=tlpa.alpha_hat))
    if curve.skipped:
        logger.warning(f"[Threshold] {len(curve.skipped)} of {last - first + 1} ranks omitted from the scan")
    return curve


def loss_matrix(data: Sequence[float], grid: SelectionGrid) -> np.ndarray:
    """(E(alpha | gamma, y) - 1)^2 for every (rank, gamma) of the grid; NaN where a point cannot be evaluated."""
    arr = _sorted_data(data)
    _check_ranks(grid.rank_grid, arr.size)
    losses = np.full((grid.rank_grid.size, grid.gamma_grid.size), np.nan)
    for i, rank in enumerate(grid.rank_grid):
        try:
            excesses = make_excesses(arr, int(rank))
        except (InsufficientTailError, TlpaInputError) as e:
            logger.debug(f"[Threshold] Rank {rank} skipped on the selection grid: {e}")
            continue
        losses[i] = (expected_alpha_grid(grid.gamma_grid, excesses) - 1.0) ** 2
    return losses


def _finish(arr: np.ndarray, rank: int, gamma: float, strategy: str) -> Selection:
    excesses = make_excesses(arr, rank)
    loss = (expected_alpha(gamma, excesses) - 1.0) ** 2
    selection = Selection(gamma_sharp=float(gamma), rank_sharp=int(rank), u_sharp=float(excesses.u),
                          evi=1.0 / (2.0 * float(gamma)), loss=float(loss), n_exceed=excesses.n,
                          strategy=strategy)
    logger.debug(f"[Threshold] {strategy} selection: rank {rank}, u={excesses.u:.6g}, gamma={gamma:.6g}, loss={loss:.3g}")
    return selection


def select(data: Sequence[float], grid: SelectionGrid) -> Selection:
    """
    The grid point minimising (E(alpha | gamma, y) - 1)^2.

    Ties go to the lowest rank, then the smallest gamma. Points that cannot be
    evaluated are skipped.

    Raises:
        NoFeasibleGridPointError: no grid point could be evaluated.
    """
    arr = _sorted_data(data)
    losses = loss_matrix(arr, grid)
    if np.all(np.isnan(losses)):
        raise NoFeasibleGridPointError(n_points=int(losses.size))
    # nanargmin returns the first minimum in row-major order: lowest rank, then smallest gamma
    i, j = np.unravel_index(int(np.nanargmin(losses)), losses.shape)
    return _finish(arr, int(grid.rank_grid[i]), float(grid.gamma_grid[j]), "grid")


def select_profile(data: Sequence[float], rank_grid: Union[SelectionGrid, Sequence[int]]) -> Selection:
    """
    Per rank, evaluate the loss only at gamma = n / (2S) and pick the rank with the smallest loss.

    Raises:
        NoFeasibleGridPointError: no rank could be evaluated.
    """
    arr = _sorted_data(data)
    ranks = rank_grid.rank_grid if isinstance(rank_grid, SelectionGrid) else np.asarray(rank_grid, dtype=np.int64)
    if ranks.size == 0:
        raise TlpaInputError("rank_grid is empty")
    _check_ranks(ranks, arr.size)
    losses = np.full(ranks.size, np.nan)
    gammas = np.full(ranks.size, np.nan)
    for i, rank in enumerate(ranks):
        try:
            excesses = make_excesses(arr, int(rank))
            gammas[i] = excesses.n / (2.0 * excesses.log_sum)
            losses[i] = (expected_alpha(gammas[i], excesses) - 1.0) ** 2
        except (InsufficientTailError, DegenerateExcessError, TlpaInputError) as e:
            logger.debug(f"[Threshold] Rank {rank} skipped in profile selection: {e}")
    if np.all(np.isnan(losses)):
        raise NoFeasibleGridPointError(n_points=int(ranks.size))
    best = int(np.nanargmin(losses))
    return _finish(arr, int(ranks[best]), float(gammas[best]), "profile")


def select_threshold(data: Sequence[float], grid: SelectionGrid, strategy: str = "grid") -> Selection:
    if strategy == "grid":
        return select(data, grid)
    if strategy == "profile":
        return select_profile(data, grid)
    raise TlpaInputError(f"Unknown selection strategy '{strategy}' (expected one of {', '.join(SELECTION_STRATEGIES)})")
