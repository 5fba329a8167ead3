# services/experiments.py
import concurrent.futures
import dataclasses
import logging
import time
from typing import Any, Dict, List, Mapping, Optional, Union

import numpy as np
import pandas as pd

from distributions import AbstractDistribution, BurrXII, Frechet, Normal, StrictPareto
from services.errors import TlpaError, TlpaInputError, ExperimentError
from services.models import (ExperimentResult, ExperimentSpec, GibbsConfig, Mixture, RepetitionRecord,
                             SelectionGrid, ThresholdCurve)
from services.threshold import grid_from_config, scan, select_threshold
from utils import helpers
from utils.helpers import repetition_seed, setup_worker_logging

logger = logging.getLogger(__name__)

Generator = Union[AbstractDistribution, Mixture]

# name -> (generator, n_obs, kind)
PRESETS: Dict[str, Dict[str, Any]] = {
    "case1": {"generator": Frechet(gamma=2.0), "n_obs": 300, "kind": "case"},
    "case2": {"generator": Frechet(gamma=1.33), "n_obs": 300, "kind": "case"},
    "case3": {"generator": BurrXII(lam=1.0, tau=1.0, eta=1.0), "n_obs": 300, "kind": "case"},
    "dataset_i": {"generator": Frechet(gamma=2.0), "n_obs": 300, "kind": "selection"},
    "dataset_ii": {"generator": BurrXII(lam=1.0, tau=1.0, eta=1.0), "n_obs": 300, "kind": "selection"},
    "table1": {"generator": Mixture(body=Normal(mu=5.0, sigma2=1.0), n_body=500,
                                    tail=StrictPareto(gamma=5.0), n_tail=100),
               "n_obs": 600, "kind": "selection"},
    "table2": {"generator": Mixture(body=Normal(mu=10.0, sigma2=16.0), n_body=500,
                                    tail=StrictPareto(gamma=2.0), n_tail=100),
               "n_obs": 600, "kind": "selection"},
}


def build_preset(name: str, config: Mapping[str, Any], master_seed: int = 0,
                 repetitions: Optional[int] = None, strategy: Optional[str] = None,
                 gibbs: Optional[GibbsConfig] = None) -> ExperimentSpec:
    """ExperimentSpec for a named preset; unset arguments come from `config`."""
    preset = PRESETS.get(name)
    if preset is None:
        raise TlpaInputError(f"Unknown experiment preset '{name}'. Known presets: {', '.join(PRESETS)}")
    grid = grid_from_config(preset["n_obs"], config) if preset["kind"] == "selection" else None
    return ExperimentSpec(
        name=name,
        generator=preset["generator"],
        n_obs=preset["n_obs"],
        kind=preset["kind"],
        repetitions=int(repetitions if repetitions is not None else config["repetitions"]),
        gibbs=gibbs or GibbsConfig(n_pairs=int(config["n_pairs"]), burn_in=int(config["burn_in"])),
        grid=grid,
        master_seed=int(master_seed),
        strategy=strategy or config["selection_strategy"],
        workers=int(config["workers"]),
        failure_tolerance=float(config["failure_tolerance"]),
    )


# --- Data generation ---

def mixture_sample(mixture: Mixture, seed: int) -> np.ndarray:
    """
    Body draws followed by tail draws; the tail's Strict Pareto values (all >= 1) are
    multiplied by the body maximum so the tail starts at max(body).
    """
    body = mixture.body.sample(mixture.n_body, repetition_seed(seed, 0)).values
    top = float(np.max(body))
    if not top > 0:
        raise TlpaInputError(f"Mixture body maximum is {top}; the tail splice needs a positive body maximum")
    tail = mixture.tail.sample(mixture.n_tail, repetition_seed(seed, 1)).values * top
    return np.concatenate([body, tail])


def generate_data(generator: Generator, n_obs: int, seed: int) -> np.ndarray:
    if isinstance(generator, Mixture):
        return mixture_sample(generator, seed)
    return generator.sample(n_obs, seed).values


# --- Repetitions ---

def _run_repetition(spec: ExperimentSpec, repetition: int) -> RepetitionRecord:
    seed = repetition_seed(spec.master_seed, repetition)
    record = RepetitionRecord(repetition=repetition, seed=seed)
    try:
        data = generate_data(spec.generator, spec.n_obs, seed)
        if spec.kind == "case":
            record.curve = scan(data, spec.rank_range, spec.gibbs.with_seed(seed))
        else:
            grid = spec.grid or SelectionGrid.default(spec.n_obs)
            record.selection = select_threshold(data, grid, spec.strategy)
    except TlpaError as e:
        logger.warning(f"[Experiments] {spec.name} repetition {repetition} failed: {e}")
        record.error = f"{type(e).__name__}: {e}"
    return record


def average_curves(curves: List[ThresholdCurve]) -> pd.DataFrame:
    """Rank-wise arithmetic means over the repetitions in which each rank was fitted."""
    columns = list(ThresholdCurve.COLUMNS)
    frames = [c.to_frame() for c in curves if len(c)]
    if not frames:
        return pd.DataFrame(columns=columns + ["n_repetitions"])
    stacked = pd.concat(frames, ignore_index=True).astype({"n_exceed": "float64"})
    grouped = stacked.groupby("rank", sort=True)
    averaged = grouped[columns[1:]].mean()
    averaged["n_repetitions"] = grouped.size()
    return averaged.reset_index()


class ExperimentRunner:
    """
    Runs the repetitions of an ExperimentSpec, in-process or on a process pool.

    Records come back in repetition order whatever the worker count, so results
    are identical with and without parallelism.
    """

    def __init__(self, workers: int = 1, log_level: Optional[int] = None, log_file_path: Optional[str] = None):
        if workers < 1:
            raise TlpaInputError(f"workers must be at least 1, got {workers}")
        self.workers = workers
        self.log_level = log_level if log_level is not None else helpers.EFFECTIVE_LOG_LEVEL
        self.log_file_path = log_file_path if log_file_path is not None else helpers.EFFECTIVE_LOG_FILE_PATH

    def _records(self, spec: ExperimentSpec) -> List[RepetitionRecord]:
        repetitions = range(spec.repetitions)
        if self.workers == 1 or spec.repetitions == 1:
            return [_run_repetition(spec, r) for r in repetitions]
        logger.info(f"[Experiments] Running {spec.repetitions} repetitions of {spec.name} on {self.workers} workers")
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=self.workers,
                initializer=setup_worker_logging,
                initargs=(self.log_level, self.log_file_path)) as executor:
            chunksize = max(1, spec.repetitions // (self.workers * 4))
            return list(executor.map(_run_repetition, [spec] * spec.repetitions, repetitions, chunksize=chunksize))

    def run(self, spec: ExperimentSpec) -> ExperimentResult:
        started = time.perf_counter()
        records = self._records(spec)
        wall_time = time.perf_counter() - started

        n_failed = sum(1 for r in records if r.failed)
        if n_failed > spec.failure_tolerance * spec.repetitions:
            raise ExperimentError(
                f"{n_failed} of {spec.repetitions} repetitions of {spec.name} failed "
                f"(tolerance {spec.failure_tolerance:.2%})",
                n_failed=n_failed, repetitions=spec.repetitions)

        result = ExperimentResult(spec=spec, records=records, wall_time=wall_time)
        ok = [r for r in records if not r.failed]
        if spec.kind == "case":
            result.curve = average_curves([r.curve for r in ok])
        elif ok:
            result.mean_rank = float(np.mean([r.selection.rank_sharp for r in ok]))
            result.mean_evi = float(np.mean([r.selection.evi for r in ok]))
        logger.info(f"[Experiments] {spec.name}: {len(ok)} repetitions in {wall_time:.1f}s ({n_failed} failed)")
        return result


def _runner_for(spec: ExperimentSpec, runner: Optional[ExperimentRunner]) -> ExperimentRunner:
    return runner or ExperimentRunner(workers=spec.workers)


def run_case(spec: ExperimentSpec, runner: Optional[ExperimentRunner] = None) -> ExperimentResult:
    """Per repetition: sample, scan every rank (or spec.rank_range); average the curves by rank."""
    if isinstance(spec.generator, Mixture):
        raise TlpaInputError("run_case needs a single distribution, not a mixture")
    if spec.kind != "case":
        spec = dataclasses.replace(spec, kind="case")
    return _runner_for(spec, runner).run(spec)


def run_selection_study(spec: ExperimentSpec, runner: Optional[ExperimentRunner] = None) -> ExperimentResult:
    """Per repetition: sample, select a threshold; report the mean selected rank and EVI."""
    if spec.kind != "selection":
        spec = dataclasses.replace(spec, kind="selection")
    if spec.grid is None:
        spec = dataclasses.replace(spec, grid=SelectionGrid.default(spec.n_obs))
    return _runner_for(spec, runner).run(spec)


def run_mixture_study(spec: ExperimentSpec, runner: Optional[ExperimentRunner] = None) -> ExperimentResult:
    if not isinstance(spec.generator, Mixture):
        raise TlpaInputError("run_mixture_study needs a Mixture generator")
    return run_selection_study(spec, runner)


def run_experiment(spec: ExperimentSpec, runner: Optional[ExperimentRunner] = None) -> ExperimentResult:
    if spec.kind == "case":
        return run_case(spec, runner)
    if isinstance(spec.generator, Mixture):
        return run_mixture_study(spec, runner)
    return run_selection_study(spec, runner)


def compare_strategies(spec: ExperimentSpec, runner: Optional[ExperimentRunner] = None) -> List[ExperimentResult]:
    """The same selection study (same seeds) under each selection strategy."""
    if spec.kind != "selection":
        raise TlpaInputError("Strategy comparison only applies to selection experiments")
    return [run_experiment(dataclasses.replace(spec, strategy=s), runner) for s in ("grid", "profile")]
