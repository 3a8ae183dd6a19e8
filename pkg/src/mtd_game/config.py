"""Configuration utilities for the MTD game solver."""

from __future__ import annotations

from dataclasses import dataclass
from os import getenv
from typing import Optional

from dotenv import load_dotenv


@dataclass(frozen=True)
class SolverConfig:
    """Default numeric settings shared by the CLI and the HTTP service."""

    epsilon: float = 1e-6
    max_iterations: Optional[int] = None
    iteration_margin: int = 10
    terminal_reward: float = 10.0
    success_easy: float = 0.8
    success_medium: float = 0.5
    success_high: float = 0.2
    log_level: str = "INFO"


def _float_env(name: str, default: float) -> float:
    raw = getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"{name} must be a number.") from exc


def _int_env(name: str, default: Optional[int]) -> Optional[int]:
    raw = getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{name} must be an integer.") from exc


def load_config(env_file: Optional[str] = None) -> SolverConfig:
    """Read the `MTD_*` settings into a `SolverConfig`.

    Values already present in the process environment win over those in `env_file`; without
    `env_file`, python-dotenv looks for a `.env` next to the caller and upwards. Unset or empty
    variables keep the `SolverConfig` defaults.
    """

    if env_file:
        load_dotenv(env_file)
    else:
        load_dotenv()

    epsilon = _float_env("MTD_EPSILON", 1e-6)
    if epsilon <= 0:
        raise ValueError("MTD_EPSILON must be positive.")

    margin = _int_env("MTD_ITERATION_MARGIN", 10)

    return SolverConfig(
        epsilon=epsilon,
        max_iterations=_int_env("MTD_MAX_ITERATIONS", None),
        iteration_margin=margin if margin is not None else 10,
        terminal_reward=_float_env("MTD_TERMINAL_REWARD", 10.0),
        success_easy=_float_env("MTD_SUCCESS_EASY", 0.8),
        success_medium=_float_env("MTD_SUCCESS_MEDIUM", 0.5),
        success_high=_float_env("MTD_SUCCESS_HIGH", 0.2),
        log_level=getenv("MTD_LOG_LEVEL", "INFO").upper(),
    )
