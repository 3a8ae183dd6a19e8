"""Policy and solution records shared by the solver, simulator and front ends."""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from .game import MarkovGame

STRATEGY_TOLERANCE = 1e-9


class PolicyError(Exception):
    """Raised when a policy does not fit the game it is used with."""


@dataclass(frozen=True, eq=False)
class MixedPolicy:
    """Per-state probability vectors over the defender's actions."""

    distributions: Tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        frozen = []
        for vector in self.distributions:
            array = np.array(vector, dtype=float)
            array.setflags(write=False)
            frozen.append(array)
        object.__setattr__(self, "distributions", tuple(frozen))

    def __getitem__(self, index: int) -> np.ndarray:
        return self.distributions[index]

    def __len__(self) -> int:
        return len(self.distributions)

    def check(self, game: MarkovGame) -> None:
        if len(self.distributions) != len(game.states):
            raise PolicyError(
                f"Policy covers {len(self.distributions)} states, game has {len(game.states)}."
            )
        for vector, state in zip(self.distributions, game.states):
            if vector.shape != (len(state.defender_actions),):
                raise PolicyError(
                    f"Policy for {state.name} has {vector.size} entries, "
                    f"expected {len(state.defender_actions)}."
                )
            if (vector < -STRATEGY_TOLERANCE).any():
                raise PolicyError(f"Policy for {state.name} has a negative probability.")
            if abs(vector.sum() - 1.0) > STRATEGY_TOLERANCE:
                raise PolicyError(f"Policy for {state.name} sums to {vector.sum():.9g}, not 1.")

    def to_document(self, game: MarkovGame) -> Dict[str, Dict[str, float]]:
        return {
            state.name: {
                action: float(p) for action, p in zip(state.defender_actions, vector)
            }
            for state, vector in zip(game.states, self.distributions)
        }

    def listing(self, game: MarkovGame, digits: int = 3) -> List[str]:
        """One `π(state): {action: p, ...}` line per state, rounded for reading."""
        lines = []
        for state, vector in zip(game.states, self.distributions):
            cells = ", ".join(
                f"{action}: {p:.{digits}f}" for action, p in zip(state.defender_actions, vector)
            )
            lines.append(f"π({state.name}): {{{cells}}}")
        return lines

    @classmethod
    def from_document(
        cls, document: Union[str, bytes, Mapping], game: MarkovGame
    ) -> "MixedPolicy":
        """Rebuild a policy from `{state: {action: p}}` or a full solve document."""

        payload: Any = json.loads(document) if isinstance(document, (str, bytes)) else document
        if isinstance(payload, Mapping) and isinstance(payload.get("policy"), Mapping):
            payload = payload["policy"]
        if not isinstance(payload, Mapping):
            raise PolicyError("Policy document must be an object.")

        vectors = []
        for state in game.states:
            entry = payload.get(state.name)
            if not isinstance(entry, Mapping):
                raise PolicyError(f"Policy has no distribution for state {state.name}.")
            unknown = set(entry) - set(state.defender_actions)
            if unknown:
                raise PolicyError(
                    f"Policy for {state.name} names unknown actions {', '.join(sorted(unknown))}."
                )
            try:
                vectors.append(
                    [float(entry.get(action, 0.0)) for action in state.defender_actions]
                )
            except (TypeError, ValueError) as exc:
                raise PolicyError(f"Policy for {state.name} has a non-numeric entry.") from exc
        policy = cls(tuple(vectors))
        policy.check(game)
        return policy


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Converged values, defender policy and the Q-matrices behind them.

    Each Q-matrix is defender x attacker, i.e. the matrix game the defender plays as row player.
    """

    strategy: str
    values: np.ndarray
    policy: MixedPolicy
    q: Tuple[np.ndarray, ...]
    iterations: int
    residual: float
    residuals: Tuple[float, ...] = field(default=(), repr=False)

    def value_map(self, game: MarkovGame) -> Dict[str, float]:
        return {name: float(v) for name, v in zip(game.state_names, self.values)}

    def to_document(self, game: MarkovGame) -> Dict[str, Any]:
        return {
            "strategy": self.strategy,
            "gamma": game.gamma,
            "iterations": self.iterations,
            "residual": self.residual,
            "values": self.value_map(game),
            "policy": self.policy.to_document(game),
            "listing": self.policy.listing(game),
        }


def uniform_distributions(sizes: Sequence[int]) -> Tuple[np.ndarray, ...]:
    return tuple(np.full(size, 1.0 / size) for size in sizes)


__all__ = ["MixedPolicy", "PolicyError", "SolveResult", "uniform_distributions"]
