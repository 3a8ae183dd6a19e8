"""Exact solution of zero-sum matrix games by linear programming.

The row player maximizes and the column player minimizes. The maximin LP

    maximize v  subject to  M^T pi >= v 1,  1^T pi = 1,  pi >= 0

is solved through the standard positive-shift transformation: with every
entry of A strictly positive, the column player's program

    maximize 1^T y  subject to  A y <= 1,  y >= 0

starts from the all-slack basis, and the optimal row strategy is read off
the reduced costs of the slack columns. Pivoting uses Bland's rule, so the
iteration cannot cycle and always picks the same representative among
several optimal strategies.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-9
CERTIFICATE_TOLERANCE = 1e-7


class MatrixGameError(ValueError):
    """Raised for malformed matrix games or inconsistent strategy vectors."""


@dataclass(frozen=True, eq=False)
class MatrixGame:
    """Payoff matrix from the row player's point of view."""

    payoff: np.ndarray

    def __post_init__(self) -> None:
        payoff = np.array(self.payoff, dtype=float)
        if payoff.ndim != 2 or payoff.shape[0] < 1 or payoff.shape[1] < 1:
            raise MatrixGameError(f"Payoff must be a non-empty 2-D matrix, got {payoff.shape}.")
        if not np.isfinite(payoff).all():
            raise MatrixGameError("Payoff matrix has a non-finite entry.")
        payoff.setflags(write=False)
        object.__setattr__(self, "payoff", payoff)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.payoff.shape


@dataclass(frozen=True, eq=False)
class MatrixSolution:
    value: float
    row_strategy: np.ndarray
    column_strategy: np.ndarray
    violation: float

    @property
    def certificate_holds(self) -> bool:
        return self.violation <= CERTIFICATE_TOLERANCE


GameLike = Union[MatrixGame, np.ndarray, Any]


def _as_game(game: GameLike) -> MatrixGame:
    return game if isinstance(game, MatrixGame) else MatrixGame(game)


def _normalize(weights: np.ndarray) -> np.ndarray:
    clipped = np.clip(weights, 0.0, None)
    total = clipped.sum()
    if total <= 0:
        raise MatrixGameError("Simplex produced an empty strategy.")
    return clipped / total


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    others = np.arange(tableau.shape[0]) != row
    tableau[others] -= np.outer(tableau[others, col], tableau[row])


def _simplex_unit_packing(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """Maximize 1^T y subject to matrix @ y <= 1, y >= 0, for a strictly positive matrix.

    Returns the primal solution y, the dual solution u (slack reduced costs) and the optimum.
    """

    m, n = matrix.shape
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = matrix
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = 1.0
    tableau[m, :n] = -1.0
    basis = np.arange(n, n + m)

    limit = 50 * (m + n) + 1000
    for _ in range(limit):
        reduced = tableau[m, :-1]
        candidates = np.nonzero(reduced < -PIVOT_TOLERANCE)[0]
        if candidates.size == 0:
            break
        col = int(candidates[0])
        column = tableau[:m, col]
        rows = np.nonzero(column > PIVOT_TOLERANCE)[0]
        if rows.size == 0:
            raise MatrixGameError("Unbounded program; the payoff shift failed.")
        ratios = tableau[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + PIVOT_TOLERANCE]
        row = int(tied[np.argmin(basis[tied])])
        _pivot(tableau, row, col)
        basis[row] = col
    else:
        raise MatrixGameError(f"Simplex did not terminate within {limit} pivots.")

    primal = np.zeros(n + m)
    primal[basis] = tableau[:m, -1]
    return primal[:n], tableau[m, n : n + m].copy(), float(tableau[m, -1])


def solve_matrix_game(game: GameLike) -> MatrixSolution:
    """Maximin value and optimal mixed strategy of the row player."""

    payoff = _as_game(game).payoff
    low, high = float(payoff.min()), float(payoff.max())
    scale = (high - low) or 1.0
    shifted = (payoff - low) / scale + 1.0

    packing, covering, optimum = _simplex_unit_packing(shifted)
    row_strategy = _normalize(covering)
    column_strategy = _normalize(packing)
    value = (1.0 / optimum - 1.0) * scale + low

    worst = float((row_strategy @ payoff).min())
    violation = max(0.0, value - worst, abs(row_strategy.sum() - 1.0))
    if violation > CERTIFICATE_TOLERANCE:
        logger.warning("Matrix game certificate off by %.3g", violation)
    return MatrixSolution(
        value=value,
        row_strategy=row_strategy,
        column_strategy=column_strategy,
        violation=violation,
    )


def solve_column_player(game: GameLike) -> Tuple[float, np.ndarray]:
    """Minimax value and optimal mixed strategy of the column (minimizing) player."""

    payoff = _as_game(game).payoff
    dual = solve_matrix_game(-payoff.T)
    return -dual.value, dual.row_strategy


def best_pure_response(game: GameLike, strategy: Any) -> Tuple[int, float]:
    """Column minimizing the row player's expected payoff; lowest index wins ties."""

    payoff = _as_game(game).payoff
    weights = np.asarray(strategy, dtype=float)
    if weights.shape != (payoff.shape[0],):
        raise MatrixGameError(
            f"Strategy of length {weights.shape} does not match {payoff.shape[0]} rows."
        )
    expected = weights @ payoff
    column = int(np.argmin(expected))
    return column, float(expected[column])


def maximin_pure(game: GameLike) -> Tuple[int, float]:
    """Row with the best worst case; lowest index wins ties."""

    floors = _as_game(game).payoff.min(axis=1)
    row = int(np.argmax(floors))
    return row, float(floors[row])


__all__ = [
    "CERTIFICATE_TOLERANCE",
    "MatrixGame",
    "MatrixGameError",
    "MatrixSolution",
    "best_pure_response",
    "maximin_pure",
    "solve_column_player",
    "solve_matrix_game",
]
