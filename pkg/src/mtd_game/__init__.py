"""Moving-target IDS placement as a zero-sum Markov game."""

from .game import MarkovGame, build_game, load_game
from .models import MixedPolicy, SolveResult
from .solver import evaluate_policy, solve_mmps, solve_optimal, uniform_policy

__all__ = [
    "MarkovGame",
    "MixedPolicy",
    "SolveResult",
    "build_game",
    "evaluate_policy",
    "load_game",
    "solve_mmps",
    "solve_optimal",
    "uniform_policy",
]
