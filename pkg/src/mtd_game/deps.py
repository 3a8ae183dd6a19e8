"""Dependency helpers for FastAPI endpoints and the command line."""

from __future__ import annotations

import logging
from functools import lru_cache

from .config import SolverConfig, load_config
from .vulnerabilities import ExploitSuccessModel

logger = logging.getLogger(__name__)


@lru_cache
def get_config() -> SolverConfig:
    return load_config()


@lru_cache
def get_success_model() -> ExploitSuccessModel:
    config = get_config()
    logger.debug(
        "Default success model easy=%s medium=%s high=%s",
        config.success_easy,
        config.success_medium,
        config.success_high,
    )
    return ExploitSuccessModel(
        easy=config.success_easy, medium=config.success_medium, high=config.success_high
    )


__all__ = ["get_config", "get_success_model"]
