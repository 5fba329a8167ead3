import json
import pathlib
import os
import logging
from dataclasses import dataclass
from typing import Optional, Any, Dict, List, Tuple
from enum import Enum
from utils.helpers import get_bundle_dir

logger = logging.getLogger(__name__)

# --- Global variables to store loading errors from initial load ---
_APP_CONFIG_LOAD_ERROR_MSG: Optional[str] = None
_USER_CONFIG_LOAD_ERROR_MSG: Optional[str] = None


class ConfigCategory(Enum):
    SAMPLER = "Sampler"
    SELECTION = "Selection"
    EXPERIMENTS = "Experiments"
    OUTPUT = "Output"

class ConfigValueType(Enum):
    INT = "int"
    FLOAT = "float"
    CHOICE = "choice"
    BINS = "bins"             # numpy bin rule name or a positive bin count

@dataclass
class ConfigChoice:
    value: str
    description: str

@dataclass
class ConfigItem:
    key: str                  # Internal key used in config dictionaries
    label: str                # Human-readable name, used in log and error messages
    value_type: ConfigValueType
    category: ConfigCategory
    default: Any
    description: Optional[str] = None
    choices: Optional[List[ConfigChoice]] = None  # For CHOICE type
    min_val: Optional[float] = None
    max_val: Optional[float] = None

    def validate(self, value: Any) -> Tuple[bool, Any]:
        """Coerces `value` to this item's type. Returns (ok, coerced_value)."""
        try:
            if self.value_type is ConfigValueType.INT:
                if isinstance(value, bool) or float(value) != int(value):
                    return False, None
                value = int(value)
            elif self.value_type is ConfigValueType.FLOAT:
                if isinstance(value, bool):
                    return False, None
                value = float(value)
            elif self.value_type is ConfigValueType.CHOICE:
                allowed = {c.value for c in (self.choices or [])}
                return (value in allowed), value
            elif self.value_type is ConfigValueType.BINS:
                if isinstance(value, str) and not value.isdigit():
                    return value in HIST_BIN_RULES, value
                value = int(value)
                return value >= 1, value
        except (TypeError, ValueError):
            return False, None
        if self.min_val is not None and value < self.min_val:
            return False, None
        if self.max_val is not None and value > self.max_val:
            return False, None
        return True, value


HIST_BIN_RULES = ("fd", "auto", "sturges", "scott", "doane", "rice", "sqrt", "stone")

# Central definition for user-configurable settings
CONFIG_ITEM_DEFINITIONS: List[ConfigItem] = [
    ConfigItem(
        key="n_pairs",
        label="Gibbs pairs per chain",
        value_type=ConfigValueType.INT,
        category=ConfigCategory.SAMPLER,
        default=2000,
        min_val=1,
        description="Number of (alpha*, gamma*) pairs drawn by each Gibbs chain."
    ),
    ConfigItem(
        key="burn_in",
        label="Burn-in pairs",
        value_type=ConfigValueType.INT,
        category=ConfigCategory.SAMPLER,
        default=0,
        min_val=0,
        description="Leading pairs discarded before averaging. Must be smaller than n_pairs."
    ),
    ConfigItem(
        key="min_exceedances",
        label="Minimum exceedances",
        value_type=ConfigValueType.INT,
        category=ConfigCategory.SELECTION,
        default=10,
        min_val=2,
        description="Smallest number of exceedances a selection-grid rank must leave."
    ),
    ConfigItem(
        key="gamma_grid_min",
        label="Gamma grid lower end",
        value_type=ConfigValueType.FLOAT,
        category=ConfigCategory.SELECTION,
        default=0.05,
        min_val=1e-12,
    ),
    ConfigItem(
        key="gamma_grid_max",
        label="Gamma grid upper end",
        value_type=ConfigValueType.FLOAT,
        category=ConfigCategory.SELECTION,
        default=10.0,
        min_val=1e-12,
    ),
    ConfigItem(
        key="gamma_grid_size",
        label="Gamma grid size",
        value_type=ConfigValueType.INT,
        category=ConfigCategory.SELECTION,
        default=200,
        min_val=1,
        description="Number of log-spaced gamma values on the selection grid."
    ),
    ConfigItem(
        key="rank_start_quantile",
        label="First selection rank (fraction of n)",
        value_type=ConfigValueType.FLOAT,
        category=ConfigCategory.SELECTION,
        default=0.5,
        min_val=0.0,
        max_val=1.0,
    ),
    ConfigItem(
        key="selection_strategy",
        label="Selection strategy",
        value_type=ConfigValueType.CHOICE,
        category=ConfigCategory.SELECTION,
        default="grid",
        choices=[
            ConfigChoice(value="grid", description="Minimise [E(alpha|gamma,y) - 1]^2 over the full (gamma, rank) grid"),
            ConfigChoice(value="profile", description="Per rank, evaluate the loss at gamma = n / (2S) only"),
        ],
    ),
    ConfigItem(
        key="repetitions",
        label="Monte Carlo repetitions",
        value_type=ConfigValueType.INT,
        category=ConfigCategory.EXPERIMENTS,
        default=1000,
        min_val=1,
    ),
    ConfigItem(
        key="workers",
        label="Parallel workers",
        value_type=ConfigValueType.INT,
        category=ConfigCategory.EXPERIMENTS,
        default=1,
        min_val=1,
        description="Worker processes used for repetitions. 1 runs them in-process."
    ),
    ConfigItem(
        key="failure_tolerance",
        label="Tolerated failed repetitions (fraction)",
        value_type=ConfigValueType.FLOAT,
        category=ConfigCategory.EXPERIMENTS,
        default=0.01,
        min_val=0.0,
        max_val=1.0,
    ),
    ConfigItem(
        key="plotting_position",
        label="QQ plotting position",
        value_type=ConfigValueType.CHOICE,
        category=ConfigCategory.OUTPUT,
        default="weibull",
        choices=[
            ConfigChoice(value="weibull", description="p_i = i / (n + 1)"),
            ConfigChoice(value="hazen", description="p_i = (i - 0.5) / n"),
        ],
    ),
    ConfigItem(
        key="hist_bins",
        label="Histogram bins",
        value_type=ConfigValueType.BINS,
        category=ConfigCategory.OUTPUT,
        default="fd",
        description="numpy bin rule ('fd' = Freedman-Diaconis) or a bin count."
    ),
]
CONFIG_ITEMS_BY_KEY: Dict[str, ConfigItem] = {item.key: item for item in CONFIG_ITEM_DEFINITIONS}

APP_CONFIG_FILE = get_bundle_dir() / "app_config.json"
USER_CONFIG_DIR = pathlib.Path(os.environ.get("TLPA_CONFIG_DIR", pathlib.Path.home() / ".config" / "tlpa-threshold"))
USER_CONFIG_FILE = USER_CONFIG_DIR / "config.json"

APP_CONFIG: Dict[str, Any] = {}
USER_CONFIG: Dict[str, Any] = {}

DEFAULT_CONFIG: Dict[str, Any] = {item_def.key: item_def.default for item_def in CONFIG_ITEM_DEFINITIONS}

APP_DEFAULTS: Dict[str, Any] = {
    "app_name": "tlpa-threshold",
    "app_version": "0.1",
    "default_seed": 0,
}

def load_config(path: pathlib.Path, is_critical: bool = False) -> Tuple[Optional[Dict[str, Any]], Optional[str]]:
    """
    Loads configuration from a JSON file.
    Returns a tuple: (config_data, error_message).
    config_data is the loaded dictionary, {} if user file not found, or None if critical error / corruption.
    error_message contains the error description if any.
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            config_data = json.load(f)
        if not isinstance(config_data, dict):
            logger.error(f"[Config] Config file {path} does not contain a JSON object.")
            return None, f"Config file {path.name} must contain a JSON object."
        logger.debug(f"[Config] Successfully loaded config from {path}")
        return config_data, None
    except FileNotFoundError:
        if is_critical:
            logger.error(f"[Config] CRITICAL: Application config file {path} not found.")
            return None, f"Critical application config file not found: {path.name}. Built-in defaults will be used."
        else: # User config file not found is normal on first run.
            logger.debug(f"[Config] User config file {path} not found. Using defaults.")
            return {}, None
    except json.JSONDecodeError as e:
        logger.error(f"[Config] Could not decode config file {path}. Error: {e}.")

        base_corrupted_name_stem = path.stem + ".corrupted"
        corrupted_file_path = path.with_stem(base_corrupted_name_stem) # config.json -> config.corrupted.json

        counter = 0
        while corrupted_file_path.exists():
            counter += 1
            corrupted_file_path = path.with_stem(f"{base_corrupted_name_stem}.{counter}")

        try:
            if path.exists():
                path.rename(corrupted_file_path)
                logger.info(f"[Config] Backed up corrupted config file {path.name} to {corrupted_file_path.name}")
                return None, f"Error decoding config file {path.name} (JSON format error).\nIt has been backed up as {corrupted_file_path.name}."
            return None, f"Error decoding config file {path.name} (JSON format error), but original file was not found to back up."
        except OSError as ose:
            logger.error(f"[Config] Could not back up corrupted file {path.name} to {corrupted_file_path.name}: {ose}")
            return None, f"Error decoding config file {path.name} (JSON format error).\nCould not back it up to {corrupted_file_path.name} due to a system error: {ose}"
    except Exception as e:
        logger.error(f"[Config] Unexpected error loading config file {path}: {e}", exc_info=True)
        return None, f"An unexpected error occurred while loading {path.name}: {e}"


def validated_user_values(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Keeps the known, valid entries of a user config dict; logs and drops the rest."""
    accepted: Dict[str, Any] = {}
    for key, value in raw.items():
        item = CONFIG_ITEMS_BY_KEY.get(key)
        if item is None:
            logger.warning(f"[Config] Unknown config key '{key}' ignored.")
            continue
        ok, coerced = item.validate(value)
        if not ok:
            logger.warning(f"[Config] Invalid value {value!r} for '{item.label}' ({key}); using default {item.default!r}.")
            continue
        accepted[key] = coerced
    return accepted


def _initialize_configs_and_globals():
    """
    Loads configurations from files and populates the global
    APP_CONFIG and USER_CONFIG dictionaries. Manages errors during loading.
    This function is run at module import time.
    """
    global _APP_CONFIG_LOAD_ERROR_MSG, _USER_CONFIG_LOAD_ERROR_MSG

    app_config_data_from_file, app_load_err = load_config(APP_CONFIG_FILE, is_critical=True)
    _APP_CONFIG_LOAD_ERROR_MSG = app_load_err

    APP_CONFIG.clear()
    APP_CONFIG.update(APP_DEFAULTS)
    if app_config_data_from_file is not None:
        APP_CONFIG.update(app_config_data_from_file)
    else:
        logger.warning("[Config] APP_CONFIG falls back to built-in defaults due to loading errors.")

    user_config_data_from_file, user_load_err = load_config(USER_CONFIG_FILE, is_critical=False)
    _USER_CONFIG_LOAD_ERROR_MSG = user_load_err

    # Order of precedence:
    # 1. User's settings from USER_CONFIG_FILE (if loaded successfully and valid)
    # 2. DEFAULT_CONFIG (definition defaults)
    USER_CONFIG.clear()
    USER_CONFIG.update(DEFAULT_CONFIG.copy())
    if user_config_data_from_file is not None: # {} if file not found, None if corrupted
        USER_CONFIG.update(validated_user_values(user_config_data_from_file))

    logger.debug("[Config] Configuration loading and processing complete.")
    if _APP_CONFIG_LOAD_ERROR_MSG:
        logger.error(f"[Config] App config loading error: {_APP_CONFIG_LOAD_ERROR_MSG}")
    if _USER_CONFIG_LOAD_ERROR_MSG:
        logger.warning(f"[Config] User config loading issue: {_USER_CONFIG_LOAD_ERROR_MSG}")


def get_initial_config_loading_errors() -> List[str]:
    """Returns a list of error messages encountered during initial config loading."""
    errors = []
    if _APP_CONFIG_LOAD_ERROR_MSG:
        errors.append(_APP_CONFIG_LOAD_ERROR_MSG)
    if _USER_CONFIG_LOAD_ERROR_MSG:
        errors.append(_USER_CONFIG_LOAD_ERROR_MSG)
    return errors

# --- Initialize configurations when this module is imported ---
_initialize_configs_and_globals()
