"""Central logging configuration for the CLI, simulations, and tests."""

from __future__ import annotations

import logging
import sys
from typing import Optional, Union


LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Return a logger configured with a consistent formatter.

    Records go to stderr; stdout is reserved for command output.
    """
    logger = logging.getLogger(name)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
        logger.setLevel(logging.INFO)
        logger.propagate = False
    return logger


def set_level(level: Union[int, str]) -> None:
    """Apply ``level`` to every package logger created so far."""
    for name, logger in logging.Logger.manager.loggerDict.items():
        if name.startswith("prepivot") and isinstance(logger, logging.Logger):
            logger.setLevel(level)
