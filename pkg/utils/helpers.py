import sys
import pathlib
import logging
import os
from typing import Optional

import numpy as np

from services.errors import TlpaInputError

DEFAULT_LOG_LEVEL = logging.INFO
logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Global variables to store the effective logging configuration
EFFECTIVE_LOG_FILE_PATH: Optional[str] = None
EFFECTIVE_LOG_LEVEL: int = DEFAULT_LOG_LEVEL

# Odd 64-bit constant (golden-ratio increment) used to spread ranks over seed space.
RANK_SEED_MULTIPLIER = 0x9E3779B97F4A7C15
UINT64_MASK = (1 << 64) - 1


def _pre_parse_log_options(argv_list) -> tuple:
    """Pulls --log-file/--verbose/--quiet out of argv before argparse runs."""
    log_file_path = None
    level = DEFAULT_LOG_LEVEL
    try:
        if "--log-file" in argv_list:
            idx = argv_list.index("--log-file")
            if idx + 1 < len(argv_list):
                potential_path = argv_list[idx + 1]
                # Basic check: ensure it's not another flag
                if not potential_path.startswith("-"):
                    log_file_path = potential_path
                else:
                    print(f"WARNING: --log-file provided but the next argument '{potential_path}' looks like another flag. Ignoring --log-file.", file=sys.stderr)
            else:
                print("WARNING: --log-file provided without a path. Ignoring.", file=sys.stderr)
        if "--verbose" in argv_list or "-v" in argv_list:
            level = logging.DEBUG
        elif "--quiet" in argv_list or "-q" in argv_list:
            level = logging.WARNING
    except Exception as e:
        print(f"WARNING: Error during logging option pre-parsing: {e}. Defaulting to console logging.", file=sys.stderr)
    return log_file_path, level


def _configure_root_logger(level: int, log_file_path: Optional[str]) -> Optional[str]:
    log_formatter = logging.Formatter(LOG_FORMAT)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()

    # Console handler: diagnostics always go to stderr, stdout is reserved for data
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(log_formatter)
    console_handler.setLevel(level)
    root_logger.addHandler(console_handler)

    effective_path = None
    if log_file_path:
        try:
            abs_log_file_path = os.path.abspath(log_file_path)
            log_dir = os.path.dirname(abs_log_file_path)
            if log_dir:
                os.makedirs(log_dir, exist_ok=True)

            file_handler = logging.FileHandler(abs_log_file_path, mode='a', encoding='utf-8')
            file_handler.setFormatter(log_formatter)
            file_handler.setLevel(level)
            root_logger.addHandler(file_handler)
            effective_path = abs_log_file_path
        except Exception as e:
            # Console logging still works if the file cannot be opened.
            print(f"ERROR: Error setting up log file {log_file_path}: {e}. Logging to console only.", file=sys.stderr)

    # numba logs compiler passes at DEBUG
    logging.getLogger('numba').setLevel(logging.WARNING)
    return effective_path


def setup_logging(argv=None):
    global EFFECTIVE_LOG_FILE_PATH, EFFECTIVE_LOG_LEVEL
    argv_list = list(sys.argv[1:] if argv is None else argv)
    log_file_path, level = _pre_parse_log_options(argv_list)
    EFFECTIVE_LOG_LEVEL = level
    EFFECTIVE_LOG_FILE_PATH = _configure_root_logger(level, log_file_path)
    if EFFECTIVE_LOG_FILE_PATH:
        logger.info(f"Logging to file: {EFFECTIVE_LOG_FILE_PATH}")


def setup_worker_logging(log_level: int, log_file_path: Optional[str] = None):
    """Configures logging inside an experiment worker process with the parent's settings."""
    _configure_root_logger(log_level, log_file_path)
    logger.debug(f"[Worker] Logging configured. Root level: {logging.getLevelName(log_level)}. File: '{log_file_path or 'None'}'.")


def get_bundle_dir() -> pathlib.Path:
    """
    Returns the base directory for the application.
    For bundled apps, it's the executable's dir or _MEIPASS.
    For development, it's the project root (parent of 'utils').
    """
    if getattr(sys, 'frozen', False):
        if hasattr(sys, '_MEIPASS'):
            return pathlib.Path(sys._MEIPASS)
        return pathlib.Path(sys.executable).parent
    return pathlib.Path(__file__).resolve().parent.parent


def rank_seed(master_seed: int, rank: int) -> int:
    """Sub-seed for the chain at a threshold rank: master XOR (rank * odd constant) mod 2^64."""
    return (int(master_seed) ^ ((int(rank) * RANK_SEED_MULTIPLIER) & UINT64_MASK)) & UINT64_MASK


def repetition_seed(master_seed: int, repetition: int) -> int:
    """Counter-based split of a master seed into the seed of one repetition."""
    seq = np.random.SeedSequence(entropy=int(master_seed) & UINT64_MASK, spawn_key=(int(repetition),))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def validate_seed(seed) -> int:
    seed = int(seed)
    if seed < 0 or seed > UINT64_MASK:
        raise TlpaInputError(f"Seed must be an unsigned 64-bit integer, got {seed}")
    return seed
