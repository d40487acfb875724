"""Logging configuration for the command-line front end."""

import logging
import os
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LEVEL_ENV_VAR = "SMOOTHER_LOG_LEVEL"


def configure_logging(debug: bool = False) -> logging.Logger:
    """Send package logs to stderr.

    INFO by default, DEBUG with ``debug``. ``SMOOTHER_LOG_LEVEL`` overrides
    both when set to a level name. Calling again replaces the handler.

    Args:
        debug: Enable verbose logging.

    Returns:
        The ``src`` package logger.
    """
    level_name = os.environ.get(LEVEL_ENV_VAR, "DEBUG" if debug else "INFO").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.INFO

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))

    package_logger = logging.getLogger("src")
    for existing in list(package_logger.handlers):
        package_logger.removeHandler(existing)
    package_logger.addHandler(handler)
    package_logger.setLevel(level)
    return package_logger
