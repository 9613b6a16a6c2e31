"""Logging setup for the command-line entry point."""

import logging
import os
import sys
from typing import Optional

LOG_LEVEL_ENV = "NILMKIT_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def resolve_level(verbosity: int = 0) -> int:
    """Pick a level from -v/-q counts, falling back to the environment."""
    if verbosity > 0:
        return logging.DEBUG
    if verbosity < 0:
        return logging.WARNING
    name = os.environ.get(LOG_LEVEL_ENV, "INFO").strip().upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def configure_logging(verbosity: int = 0, stream: Optional[object] = None) -> None:
    """Install a single stderr handler on the package logger."""
    root = logging.getLogger("nilmkit")
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(resolve_level(verbosity))
    root.propagate = False
