"""Shapley value iteration for zero-sum Markov games and the baseline strategies."""

from __future__ import annotations

import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np

from .game import MarkovGame
from .matrix_lp import best_pure_response, maximin_pure, solve_matrix_game
from .models import MixedPolicy, SolveResult, uniform_distributions

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-6
DEFAULT_MARGIN = 10

StageSolver = Callable[[int, np.ndarray], Tuple[float, np.ndarray]]


class ConvergenceError(Exception):
    """Raised when value iteration does not reach the requested precision."""

    def __init__(self, iterations: int, residual: float) -> None:
        super().__init__(
            f"Value iteration did not converge after {iterations} iterations "
            f"(residual {residual:.3g}); gamma may be too close to 1 for epsilon."
        )
        self.iterations = iterations
        self.residual = residual


def iteration_bound(gamma: float, epsilon: float, reward_bound: float) -> int:
    """Iterations after which the contraction guarantees a residual below `epsilon`."""

    if gamma <= 0.0 or reward_bound <= 0.0:
        return 1
    ratio = epsilon * (1.0 - gamma) / reward_bound
    if ratio >= 1.0:
        return 1
    return max(1, math.ceil(math.log(ratio) / math.log(gamma)))


def q_matrices(game: MarkovGame, values: np.ndarray) -> Tuple[np.ndarray, ...]:
    """Defender x attacker matrices R + gamma * sum_s' tau * V(s') for every state."""

    return tuple(
        state.rewards.T + game.gamma * (state.transitions @ values).T for state in game.states
    )


def _iterate(
    game: MarkovGame,
    stage: StageSolver,
    strategy: str,
    epsilon: float,
    max_iterations: Optional[int],
    margin: int,
) -> SolveResult:
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}.")
    if max_iterations is None:
        max_iterations = iteration_bound(game.gamma, epsilon, game.reward_bound) + margin

    values = np.zeros(len(game.states))
    residuals: List[float] = []
    for iteration in range(1, max_iterations + 1):
        q = q_matrices(game, values)
        stages = [stage(i, matrix) for i, matrix in enumerate(q)]
        updated = np.array([value for value, _ in stages])
        residual = float(np.abs(updated - values).max())
        residuals.append(residual)
        values = updated
        if residual < epsilon:
            logger.info(
                "%s converged in %d iterations (residual %.3g, gamma %.3g)",
                strategy,
                iteration,
                residual,
                game.gamma,
            )
            return SolveResult(
                strategy=strategy,
                values=values,
                policy=MixedPolicy(tuple(distribution for _, distribution in stages)),
                q=q,
                iterations=iteration,
                residual=residual,
                residuals=tuple(residuals),
            )

    raise ConvergenceError(max_iterations, residuals[-1])


def solve_optimal(
    game: MarkovGame,
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: Optional[int] = None,
    margin: int = DEFAULT_MARGIN,
) -> SolveResult:
    """Optimal mixed defender policy; every stage game is solved exactly by LP."""

    def stage(_: int, q: np.ndarray) -> Tuple[float, np.ndarray]:
        solution = solve_matrix_game(q)
        return solution.value, solution.row_strategy

    return _iterate(game, stage, "optimal", epsilon, max_iterations, margin)


def solve_mmps(
    game: MarkovGame,
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: Optional[int] = None,
    margin: int = DEFAULT_MARGIN,
) -> SolveResult:
    """Min-max pure strategy: the best static placement in each state."""

    def stage(_: int, q: np.ndarray) -> Tuple[float, np.ndarray]:
        row, value = maximin_pure(q)
        pure = np.zeros(q.shape[0])
        pure[row] = 1.0
        return value, pure

    return _iterate(game, stage, "mmps", epsilon, max_iterations, margin)


def uniform_policy(game: MarkovGame) -> MixedPolicy:
    return MixedPolicy(uniform_distributions([len(s.defender_actions) for s in game.states]))


def evaluate_policy(
    game: MarkovGame,
    policy: MixedPolicy,
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: Optional[int] = None,
    margin: int = DEFAULT_MARGIN,
    strategy: str = "fixed",
) -> SolveResult:
    """Guaranteed value of a fixed defender policy against a best-responding attacker."""

    policy.check(game)

    def stage(index: int, q: np.ndarray) -> Tuple[float, np.ndarray]:
        _, value = best_pure_response(q, policy[index])
        return value, policy[index]

    return _iterate(game, stage, strategy, epsilon, max_iterations, margin)


def solve_urs(
    game: MarkovGame,
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: Optional[int] = None,
    margin: int = DEFAULT_MARGIN,
) -> SolveResult:
    return evaluate_policy(game, uniform_policy(game), epsilon, max_iterations, margin, "urs")


STRATEGIES = {
    "optimal": solve_optimal,
    "mmps": solve_mmps,
    "urs": solve_urs,
}


def solve(
    game: MarkovGame,
    strategy: str,
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: Optional[int] = None,
    margin: int = DEFAULT_MARGIN,
) -> SolveResult:
    try:
        solver = STRATEGIES[strategy]
    except KeyError as exc:
        raise ValueError(
            f"Unknown strategy {strategy!r}; expected one of {', '.join(STRATEGIES)}."
        ) from exc
    return solver(game, epsilon, max_iterations, margin)


__all__ = [
    "ConvergenceError",
    "STRATEGIES",
    "evaluate_policy",
    "iteration_bound",
    "q_matrices",
    "solve",
    "solve_mmps",
    "solve_optimal",
    "solve_urs",
    "uniform_policy",
]
