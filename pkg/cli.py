# cli.py
import argparse
import dataclasses
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from distributions import AbstractDistribution, distribution_from_params
from services.datasets import ingest_csv
from services.errors import TlpaError, TlpaInputError
from services.experiments import PRESETS, ExperimentRunner, build_preset, compare_strategies, generate_data, run_experiment
from services.gibbs import estimate_tlpa
from services.models import ExceedanceSample, GibbsConfig, Mixture
from services.posterior import make_excesses, sp_posterior
from services.reporting import PLOTTING_POSITIONS, fit_frame, hist_data, qq_data, write_table
from services.threshold import SELECTION_STRATEGIES, grid_from_config, scan, select_threshold
from utils.config import APP_CONFIG, USER_CONFIG, CONFIG_ITEMS_BY_KEY
from utils.helpers import rank_seed, validate_seed

logger = logging.getLogger(__name__)

EXIT_USAGE = 1


def _seed_arg(text: str) -> int:
    try:
        return validate_seed(int(text, 0))
    except (ValueError, TlpaInputError) as e:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}: {e}")


def _param_arg(text: str) -> Tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), value.strip()


# Flags shared by every subcommand. Each entry is (flags, argparse options).
COMMON_ARG_DEFINITIONS: List[Tuple[List[str], Dict[str, Any]]] = [
    (["--seed"],            {"type": _seed_arg, "default": None, "help": "Master seed (unsigned 64-bit). Defaults to the app config's default_seed (0)."}),
    (["--out"],             {"type": str, "default": None, "help": "Output CSV path; '-' or omitted writes to standard output"}),
    (["--format"],          {"choices": ["csv"], "default": "csv", "help": "Output format"}),
    (["--log-file"],        {"type": str, "dest": "log_file", "help": "Path to a file for logging output."}),
    (["-v", "--verbose"],   {"action": "store_true", "help": "Log debug messages"}),
    (["-q", "--quiet"],     {"action": "store_true", "help": "Only log warnings and errors"}),
]

INPUT_ARGS: List[Tuple[List[str], Dict[str, Any]]] = [
    (["-i", "--input"],     {"type": str, "required": True, "help": "CSV file holding the observations"}),
    (["-c", "--column"],    {"type": str, "default": None, "help": "Column header name or 0-based index (optional for one-column files)"}),
]

GIBBS_ARGS: List[Tuple[List[str], Dict[str, Any]]] = [
    (["--n-pairs"],         {"type": int, "help": "Gibbs pairs per chain"}),
    (["--burn-in"],         {"type": int, "help": "Leading Gibbs pairs discarded before averaging"}),
    (["--gamma-init"],      {"type": float, "help": "Starting gamma of each chain (default: n/S at that threshold)"}),
]

SELECTION_ARGS: List[Tuple[List[str], Dict[str, Any]]] = [
    (["--strategy"],        {"choices": list(SELECTION_STRATEGIES), "help": "Selection rule: 'grid' (full gamma x rank grid) or 'profile'"}),
    (["--min-exceedances"], {"type": int, "help": "Smallest number of exceedances a candidate threshold must leave"}),
]

THRESHOLD_CHOICE_ARGS: List[Tuple[List[str], Dict[str, Any]]] = [
    (["--rank"],            {"type": int, "help": "1-based rank of the threshold in the sorted data"}),
    (["--select"],          {"action": "store_true", "help": "Choose the threshold by running threshold selection"}),
]

COMMAND_DEFINITIONS: Dict[str, Tuple[str, List[Tuple[List[str], Dict[str, Any]]]]] = {
    "simulate": ("Generate a data set from a distribution family or an experiment preset", [
        (["--family"],      {"choices": list(AbstractDistribution.family_names()), "help": "Distribution family"}),
        (["--param"],       {"type": _param_arg, "action": "append", "default": [], "metavar": "KEY=VALUE",
                             "help": "Family parameter, repeatable (e.g. --param gamma=2)"}),
        (["--preset"],      {"choices": list(PRESETS), "help": "Use the generator of an experiment preset"}),
        (["-n", "--size"],  {"type": int, "help": "Number of observations (defaults to the preset's size)"}),
    ]),
    "scan": ("SP and TLPa estimates at every threshold rank", INPUT_ARGS + GIBBS_ARGS + [
        (["--rank-min"],    {"type": int, "help": "First rank to scan (default 1)"}),
        (["--rank-max"],    {"type": int, "help": "Last rank to scan (default n-2)"}),
    ]),
    "select": ("Select the threshold minimising (E(alpha|gamma,y) - 1)^2", INPUT_ARGS + SELECTION_ARGS),
    "fit": ("SP and TLPa fits at one threshold rank", INPUT_ARGS + GIBBS_ARGS + [
        (["--rank"],        {"type": int, "required": True, "help": "1-based rank of the threshold in the sorted data"}),
        (["--level"],       {"type": float, "default": 0.95, "help": "Credible level of the SP EVI interval"}),
    ]),
    "qq": ("Log SP and TLPa quantiles against log sorted observations above a threshold",
           INPUT_ARGS + GIBBS_ARGS + SELECTION_ARGS + THRESHOLD_CHOICE_ARGS + [
        (["--plotting-position"], {"choices": list(PLOTTING_POSITIONS), "help": "Plotting positions of the sorted excesses"}),
    ]),
    "experiment": ("Run a Monte Carlo experiment preset", GIBBS_ARGS + [
        (["--preset"],      {"choices": list(PRESETS), "required": True, "help": "Experiment preset"}),
        (["--repetitions"], {"type": int, "help": "Number of repetitions"}),
        (["--strategy"],    {"choices": list(SELECTION_STRATEGIES) + ["both"], "help": "Selection rule; 'both' runs each and emits one row per rule"}),
        (["--min-exceedances"], {"type": int, "help": "Smallest number of exceedances a candidate threshold must leave"}),
        (["--rank-min"],    {"type": int, "help": "First rank scanned by scan presets"}),
        (["--rank-max"],    {"type": int, "help": "Last rank scanned by scan presets"}),
        (["--workers"],     {"type": int, "help": "Worker processes for the repetitions"}),
        (["--records"],     {"type": str, "help": "Also write the per-repetition selections of selection presets to this CSV"}),
    ]),
    "hist": ("Histogram bin counts with the threshold's bin marked", INPUT_ARGS + SELECTION_ARGS + THRESHOLD_CHOICE_ARGS + [
        (["--bins"],        {"type": str, "help": "numpy bin rule (e.g. 'fd') or a bin count"}),
    ]),
}

# CLI flag dest -> config key it overrides
CONFIG_OVERRIDES = {
    "n_pairs": "n_pairs",
    "burn_in": "burn_in",
    "min_exceedances": "min_exceedances",
    "strategy": "selection_strategy",
    "repetitions": "repetitions",
    "workers": "workers",
    "plotting_position": "plotting_position",
    "bins": "hist_bins",
}


class CustomArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        args = {'prog': self.prog, 'message': message}
        self.exit(EXIT_USAGE, '%(prog)s: error: %(message)s\n' % args)


def build_parser() -> CustomArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for flags, options in COMMON_ARG_DEFINITIONS:
        common.add_argument(*flags, **options)

    parser = CustomArgumentParser(
        prog="tlpa-threshold",
        description="Threshold selection for heavy-tailed data with the Topp-Leone Pareto model",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {APP_CONFIG.get('app_version', 'unknown')}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for command, (help_text, definitions) in COMMAND_DEFINITIONS.items():
        sub = subparsers.add_parser(command, help=help_text, description=help_text, parents=[common])
        for flags, options in definitions:
            sub.add_argument(*flags, **options)
    return parser


def _effective_config(args: argparse.Namespace) -> Dict[str, Any]:
    """USER_CONFIG with the CLI flags that were given layered on top, validated like config values."""
    config = dict(USER_CONFIG)
    for dest, key in CONFIG_OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is None or (dest == "strategy" and value == "both"):
            continue
        item = CONFIG_ITEMS_BY_KEY[key]
        ok, coerced = item.validate(value)
        if not ok:
            raise TlpaInputError(f"Invalid value {value!r} for {item.label}")
        config[key] = coerced
    return config


def _seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else validate_seed(APP_CONFIG.get("default_seed", 0))


def _gibbs_config(args: argparse.Namespace, config: Dict[str, Any], seed: int) -> GibbsConfig:
    return GibbsConfig(n_pairs=int(config["n_pairs"]), burn_in=int(config["burn_in"]),
                       gamma_init=getattr(args, "gamma_init", None), seed=seed)


def _load_values(args: argparse.Namespace) -> np.ndarray:
    return ingest_csv(args.input, args.column).values


def _threshold_excesses(args, values: np.ndarray, config: Dict[str, Any]) -> ExceedanceSample:
    """Excesses above the threshold chosen with --rank or --select."""
    if (args.rank is None) == (not args.select):
        raise TlpaInputError("Give exactly one of --rank or --select")
    data = np.sort(values)
    if args.select:
        selection = select_threshold(data, grid_from_config(data.size, config), config["selection_strategy"])
        logger.info(f"[CLI] Selected rank {selection.rank_sharp} (u={selection.u_sharp:.6g})")
        return make_excesses(data, selection.rank_sharp)
    return make_excesses(data, args.rank)


# --- Subcommands ---

def _cmd_simulate(args, config) -> pd.DataFrame:
    seed = _seed(args)
    if (args.family is None) == (args.preset is None):
        raise TlpaInputError("Give exactly one of --family or --preset")
    if args.family is not None:
        generator = distribution_from_params(args.family, dict(args.param))
        if args.size is None:
            raise TlpaInputError("--size is required with --family")
        n_obs = args.size
    else:
        generator = PRESETS[args.preset]["generator"]
        n_obs = PRESETS[args.preset]["n_obs"]
        if args.size is not None and isinstance(generator, Mixture):
            raise TlpaInputError("Mixture presets have a fixed size")
        n_obs = args.size if args.size is not None else n_obs
    return pd.DataFrame({"value": generate_data(generator, n_obs, seed)})


def _cmd_scan(args, config) -> pd.DataFrame:
    values = _load_values(args)
    rank_range = None
    if args.rank_min is not None or args.rank_max is not None:
        rank_range = (1 if args.rank_min is None else args.rank_min,
                      values.size - 2 if args.rank_max is None else args.rank_max)
    curve = scan(values, rank_range, _gibbs_config(args, config, _seed(args)))
    return curve.to_frame()


def _cmd_select(args, config) -> pd.DataFrame:
    values = _load_values(args)
    selection = select_threshold(values, grid_from_config(values.size, config), config["selection_strategy"])
    return selection.to_frame()


def _cmd_fit(args, config) -> pd.DataFrame:
    excesses = make_excesses(np.sort(_load_values(args)), args.rank)
    cfg = _gibbs_config(args, config, rank_seed(_seed(args), args.rank))
    return fit_frame(excesses, sp_posterior(excesses), estimate_tlpa(excesses, cfg), args.level)


def _cmd_qq(args, config) -> pd.DataFrame:
    excesses = _threshold_excesses(args, _load_values(args), config)
    cfg = _gibbs_config(args, config, rank_seed(_seed(args), excesses.rank))
    table = qq_data(excesses, excesses.u, sp_posterior(excesses), estimate_tlpa(excesses, cfg),
                    config["plotting_position"])
    return table.to_frame()


def _cmd_experiment(args, config) -> pd.DataFrame:
    spec = build_preset(args.preset, config, master_seed=_seed(args),
                        gibbs=_gibbs_config(args, config, 0))
    if args.rank_min is not None or args.rank_max is not None:
        spec = dataclasses.replace(spec, rank_range=(1 if args.rank_min is None else args.rank_min,
                                                      spec.n_obs - 2 if args.rank_max is None else args.rank_max))
    runner = ExperimentRunner(workers=int(config["workers"]))
    if args.strategy == "both":
        results = compare_strategies(spec, runner)
    else:
        results = [run_experiment(spec, runner)]
    if spec.kind == "case":
        return results[0].curve
    if args.records:
        write_table(pd.concat([r.selections_frame().assign(strategy=r.spec.strategy) for r in results],
                              ignore_index=True), args.records)
    return pd.concat([r.summary_frame() for r in results], ignore_index=True)


def _cmd_hist(args, config) -> pd.DataFrame:
    values = _load_values(args)
    threshold = None
    if args.rank is not None or args.select:
        threshold = _threshold_excesses(args, values, config).u
    return hist_data(values, config["hist_bins"], threshold)


COMMANDS: Dict[str, Callable[[argparse.Namespace, Dict[str, Any]], pd.DataFrame]] = {
    "simulate": _cmd_simulate,
    "scan": _cmd_scan,
    "select": _cmd_select,
    "fit": _cmd_fit,
    "qq": _cmd_qq,
    "experiment": _cmd_experiment,
    "hist": _cmd_hist,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Runs one subcommand. Returns the process exit status: 0, 1 (usage), 2 (input), 3 (numeric)."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
    except SystemExit as e:
        return int(e.code or 0)

    logger.debug(f"[CLI] Running '{args.command}'")
    try:
        config = _effective_config(args)
        frame = COMMANDS[args.command](args, config)
        write_table(frame, args.out)
    except TlpaError as e:
        logger.error(f"[CLI] {args.command} failed: {e.message}")
        if e.original_exception is not None:
            logger.debug(f"[CLI] Caused by: {e.original_exception!r}")
        return e.exit_code
    return 0
