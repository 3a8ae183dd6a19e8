"""Monte-Carlo rollouts of a defender policy against an attacker on the game's kernel.

Episodes for start state `s` are simulated in blocks of `BLOCK_SIZE`; block `b`
draws from its own generator seeded with `SeedSequence([seed, s, b])`, so the
statistics do not depend on how blocks are scheduled.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .game import MarkovGame
from .models import MixedPolicy, PolicyError
from .solver import evaluate_policy

logger = logging.getLogger(__name__)

BLOCK_SIZE = 4096
GENERATOR = "numpy PCG64, SeedSequence([seed, start_state, block])"


class SimulationError(Exception):
    """Raised for invalid rollout settings or attacker specifications."""


class AttackerKind(Enum):
    BEST_RESPONSE = "best-response"
    UNIFORM_RANDOM = "uniform"
    FIXED_PURE = "fixed"


@dataclass(frozen=True)
class AttackerMode:
    """How the attacker picks its action in each step.

    A fixed attacker plays `actions[state]`; states it does not name fall back
    to their first (idle) attacker action.
    """

    kind: AttackerKind = AttackerKind.BEST_RESPONSE
    actions: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def best_response(cls) -> "AttackerMode":
        return cls(AttackerKind.BEST_RESPONSE)

    @classmethod
    def uniform_random(cls) -> "AttackerMode":
        return cls(AttackerKind.UNIFORM_RANDOM)

    @classmethod
    def fixed_pure(cls, actions: Mapping[str, str]) -> "AttackerMode":
        return cls(AttackerKind.FIXED_PURE, dict(actions))

    @classmethod
    def parse(cls, text: str) -> "AttackerMode":
        """Parse `best-response`, `uniform` or `fixed:s0=exp-LDAP,s1=exp-Web`."""

        text = text.strip()
        if text == AttackerKind.BEST_RESPONSE.value:
            return cls.best_response()
        if text == AttackerKind.UNIFORM_RANDOM.value:
            return cls.uniform_random()
        prefix = AttackerKind.FIXED_PURE.value + ":"
        if text.startswith(prefix):
            actions: Dict[str, str] = {}
            for item in filter(None, text[len(prefix) :].split(",")):
                state, sep, action = item.partition("=")
                if not sep or not state.strip() or not action.strip():
                    raise SimulationError(f"Malformed fixed attacker entry {item!r}.")
                actions[state.strip()] = action.strip()
            return cls.fixed_pure(actions)
        raise SimulationError(
            f"Unknown attacker mode {text!r}; expected best-response, uniform or fixed:..."
        )

    def describe(self) -> str:
        if self.kind is AttackerKind.FIXED_PURE:
            pairs = ",".join(f"{s}={a}" for s, a in sorted(self.actions.items()))
            return f"{self.kind.value}:{pairs}"
        return self.kind.value


@dataclass(frozen=True)
class RolloutConfig:
    episodes: int
    horizon: int
    seed: int
    attacker: AttackerMode = field(default_factory=AttackerMode.best_response)

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise SimulationError(f"episodes must be at least 1, got {self.episodes}.")
        if self.horizon < 1:
            raise SimulationError(f"horizon must be at least 1, got {self.horizon}.")
        if not 0 <= self.seed < 2**64:
            raise SimulationError(f"seed must be a 64-bit unsigned integer, got {self.seed}.")


@dataclass(frozen=True)
class StartStateStats:
    state: str
    mean_return: float
    standard_error: float
    detections: int
    goal_reaches: int


@dataclass(frozen=True)
class RolloutReport:
    episodes: int
    horizon: int
    seed: int
    gamma: float
    attacker: str
    truncation_bound: float
    stats: Tuple[StartStateStats, ...]
    generator: str = GENERATOR

    def for_state(self, name: str) -> StartStateStats:
        for entry in self.stats:
            if entry.state == name:
                return entry
        raise KeyError(name)

    def to_document(self) -> Dict[str, Any]:
        return {
            "generator": self.generator,
            "seed": self.seed,
            "episodes": self.episodes,
            "horizon": self.horizon,
            "gamma": self.gamma,
            "attacker": self.attacker,
            "truncation_bound": self.truncation_bound,
            "states": [
                {
                    "state": entry.state,
                    "mean_return": entry.mean_return,
                    "standard_error": entry.standard_error,
                    "detections": entry.detections,
                    "goal_reaches": entry.goal_reaches,
                }
                for entry in self.stats
            ],
        }

    def to_text(self) -> str:
        lines = [
            f"# generator: {self.generator}",
            f"# seed: {self.seed}",
            f"# episodes: {self.episodes}  horizon: {self.horizon}  gamma: {self.gamma:g}",
            f"# attacker: {self.attacker}",
            f"# truncation_bound: {self.truncation_bound:.6g}",
            "state mean_return standard_error detections goal_reaches",
        ]
        for entry in self.stats:
            lines.append(
                f"{entry.state} {entry.mean_return:.6f} {entry.standard_error:.6f} "
                f"{entry.detections} {entry.goal_reaches}"
            )
        return "\n".join(lines) + "\n"


def sample_next_states(rng: np.random.Generator, kernels: np.ndarray) -> np.ndarray:
    """Draw one successor index per row of an (n, S) array of transition distributions."""

    cdf = np.cumsum(kernels, axis=1)
    draws = rng.random(kernels.shape[0])
    picked = (draws[:, None] >= cdf).sum(axis=1)
    return np.minimum(picked, kernels.shape[1] - 1)


def _attacker_choices(
    game: MarkovGame,
    policy: MixedPolicy,
    mode: AttackerMode,
    q: Optional[Sequence[np.ndarray]],
) -> List[Optional[int]]:
    """Pure attacker action per state, or None where the attacker randomizes."""

    if mode.kind is AttackerKind.UNIFORM_RANDOM:
        return [None] * len(game.states)

    if mode.kind is AttackerKind.FIXED_PURE:
        unknown = set(mode.actions) - set(game.state_names)
        if unknown:
            raise SimulationError(f"Fixed attacker names unknown states {sorted(unknown)}.")
        choices: List[Optional[int]] = []
        for state in game.states:
            action = mode.actions.get(state.name, state.attacker_actions[0])
            if action not in state.attacker_actions:
                raise SimulationError(
                    f"Attacker action {action!r} is not available in state {state.name}."
                )
            choices.append(state.attacker_actions.index(action))
        return choices

    if q is None:
        q = evaluate_policy(game, policy).q
    if len(q) != len(game.states):
        raise SimulationError("Q-matrices do not match the game's states.")
    return [int(np.argmin(policy[i] @ matrix)) for i, matrix in enumerate(q)]


def _sampling_weights(vector: np.ndarray) -> np.ndarray:
    clipped = np.clip(vector, 0.0, None)
    return clipped / clipped.sum()


def _run_block(
    game: MarkovGame,
    policy: MixedPolicy,
    choices: Sequence[Optional[int]],
    start: int,
    size: int,
    horizon: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    current = np.full(size, start)
    returns = np.zeros(size)
    detected = np.zeros(size, dtype=bool)
    reached = np.zeros(size, dtype=bool)
    goal = np.array([state.goal for state in game.states])
    masks = [game.detection_mask(i) for i in range(len(game.states))]
    weights = [_sampling_weights(vector) for vector in policy.distributions]
    discount = 1.0

    for _ in range(horizon):
        reached |= goal[current]
        following = current.copy()
        for index, state in enumerate(game.states):
            rows = np.nonzero(current == index)[0]
            if rows.size == 0:
                continue
            defender = rng.choice(len(state.defender_actions), size=rows.size, p=weights[index])
            if choices[index] is None:
                attacker = rng.integers(len(state.attacker_actions), size=rows.size)
            else:
                attacker = np.full(rows.size, choices[index])
            returns[rows] += discount * state.rewards[attacker, defender]
            detected[rows] |= masks[index][attacker, defender]
            following[rows] = sample_next_states(rng, state.transitions[attacker, defender])
        current = following
        discount *= game.gamma
    reached |= goal[current]

    return returns, detected, reached


def simulate(
    game: MarkovGame,
    policy: MixedPolicy,
    config: RolloutConfig,
    q: Optional[Sequence[np.ndarray]] = None,
) -> RolloutReport:
    """Empirical discounted defender return of `policy` from every start state."""

    try:
        policy.check(game)
    except PolicyError as exc:
        raise SimulationError(str(exc)) from exc
    choices = _attacker_choices(game, policy, config.attacker, q)

    stats: List[StartStateStats] = []
    for start, state in enumerate(game.states):
        chunks: List[np.ndarray] = []
        detections = reaches = 0
        for block, offset in enumerate(range(0, config.episodes, BLOCK_SIZE)):
            size = min(BLOCK_SIZE, config.episodes - offset)
            seeds = np.random.SeedSequence([config.seed, start, block])
            rng = np.random.Generator(np.random.PCG64(seeds))
            returns, detected, reached = _run_block(
                game, policy, choices, start, size, config.horizon, rng
            )
            chunks.append(returns)
            detections += int(detected.sum())
            reaches += int(reached.sum())
        returns = np.concatenate(chunks)
        error = float(returns.std(ddof=1) / np.sqrt(returns.size)) if returns.size > 1 else 0.0
        stats.append(
            StartStateStats(
                state=state.name,
                mean_return=float(returns.mean()),
                standard_error=error,
                detections=detections,
                goal_reaches=reaches,
            )
        )
        logger.debug("Simulated %d episodes from %s", config.episodes, state.name)

    bound = game.gamma**config.horizon * game.reward_bound / (1.0 - game.gamma)
    return RolloutReport(
        episodes=config.episodes,
        horizon=config.horizon,
        seed=config.seed,
        gamma=game.gamma,
        attacker=config.attacker.describe(),
        truncation_bound=float(bound),
        stats=tuple(stats),
    )


__all__ = [
    "AttackerKind",
    "AttackerMode",
    "RolloutConfig",
    "RolloutReport",
    "SimulationError",
    "StartStateStats",
    "sample_next_states",
    "simulate",
]
