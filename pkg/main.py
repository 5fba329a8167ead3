# main.py
import time
start_time = time.time()
# Logging should be set up BEFORE utils.config is imported if we want to see its loading logs.
from utils.helpers import setup_logging
setup_logging()

import logging
import multiprocessing
import sys
import traceback

from utils.config import get_initial_config_loading_errors
import cli

logger = logging.getLogger(__name__)

EXIT_UNEXPECTED = 3


# --- Global Exception Handler ---
def handle_global_exception(exc_type, exc_value, exc_traceback):
    """Logs unhandled exceptions before the interpreter reports them."""
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return
    error_message_long = "".join(traceback.format_exception(exc_type, exc_value, exc_traceback))
    logger.critical(f"Unhandled exception caught by global handler:\n{error_message_long}")


def main() -> int:
    logger.debug(f"Initial imports completed in {time.time() - start_time:.3f} seconds")
    multiprocessing.freeze_support()
    for message in get_initial_config_loading_errors():
        logger.warning(f"[Config] {message}")
    return cli.main()


if __name__ == "__main__":
    sys.excepthook = handle_global_exception
    try:
        exit_code = main()
    except Exception:
        handle_global_exception(*sys.exc_info())
        exit_code = EXIT_UNEXPECTED
    logging.shutdown()
    sys.exit(exit_code)
