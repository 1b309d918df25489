# src/tensorloc/core/configure_logging.py
"""
Loguru setup shared by the CLI and the replicate workers.

INFO and SUCCESS lines stay short so progress output is readable; anything
at WARNING or above, and every line once DEBUG/TRACE is requested, carries
the timestamp and call site. Worker processes tag each line with their
process name so pooled replicate logs can be told apart.
"""

import multiprocessing
import os
import sys

from loguru import logger
from omegaconf import DictConfig

LOG_LEVELS = {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"}
LOG_LEVEL_ENV = "TENSORLOC_LOG_LEVEL"

_SHORT = "<level>{level:8}</level> | {extra[tag]}<level>{message}</level>\n"
_FULL = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level:8}</level> | {extra[tag]}"
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>\n"
)


def env_log_level(default: str = "INFO") -> str:
    """Level requested through TENSORLOC_LOG_LEVEL, or the default if unset/invalid."""
    level = (os.getenv(LOG_LEVEL_ENV) or default).upper()
    return level if level in LOG_LEVELS else default


def _level_from(source: str | DictConfig | None) -> str | None:
    if isinstance(source, DictConfig):
        source = source.get("logging", {}).get("level", "INFO")
    if not source:
        return None
    level = str(source).upper()
    if level not in LOG_LEVELS:
        raise ValueError(f"Invalid log level: {level}")
    return level


def _formatter(level: str):
    verbose = level in {"DEBUG", "TRACE"}

    def fmt(record) -> str:
        if verbose or record["level"].name not in {"INFO", "SUCCESS"}:
            return _FULL
        return _SHORT

    return fmt


def configure_logging(log_level: str | DictConfig | None = "INFO", *, worker: bool = False):
    """
    Replace all loguru sinks with a single stderr sink at ``log_level``.

    ``log_level`` may be a level name or a composed config holding
    ``logging.level``; None leaves the current setup untouched.
    """
    level = _level_from(log_level)
    if level is None:
        return

    logger.remove()
    tag = f"[{multiprocessing.current_process().name}] " if worker else ""
    logger.configure(extra={"tag": tag})
    logger.add(
        sys.stderr,
        level=level,
        format=_formatter(level),
        backtrace=level == "TRACE",
        diagnose=level == "TRACE",
        enqueue=False,
    )
    logger.debug("Loguru configured (level={}, worker={})", level, worker)
