"""Discount-factor sweeps comparing MMPS, URS and the optimal mixed policy."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from ..game import MarkovGame
from ..solver import DEFAULT_EPSILON, DEFAULT_MARGIN, solve_mmps, solve_optimal, solve_urs

logger = logging.getLogger(__name__)

COLUMN_SUFFIXES = (("mmps", "mmp"), ("urs", "ur"), ("optimal", "om"))


@dataclass(frozen=True, slots=True)
class SweepRow:
    """Per-state defender values of each strategy at one discount factor."""

    gamma: float
    values: Dict[str, Tuple[float, ...]]


@dataclass(frozen=True)
class SweepTable:
    state_names: Tuple[str, ...]
    rows: Tuple[SweepRow, ...]

    @property
    def gammas(self) -> Tuple[float, ...]:
        return tuple(row.gamma for row in self.rows)

    def header(self) -> List[str]:
        columns = ["gamma"]
        for i in range(len(self.state_names)):
            columns.extend(f"V{i}_{suffix}" for _, suffix in COLUMN_SUFFIXES)
        return columns

    def to_records(self) -> List[Dict[str, float]]:
        records = []
        for row in self.rows:
            record = {"gamma": row.gamma}
            for i in range(len(self.state_names)):
                for strategy, suffix in COLUMN_SUFFIXES:
                    record[f"V{i}_{suffix}"] = row.values[strategy][i]
            records.append(record)
        return records

    def to_dat(self) -> str:
        """Whitespace-delimited table, one row per gamma, ready for plotting."""
        header = self.header()
        lines = [" ".join(header)]
        for record in self.to_records():
            lines.append(" ".join(f"{record[column]:.6f}" for column in header))
        return "\n".join(lines) + "\n"


def _checked_gammas(gammas: Iterable[float]) -> List[float]:
    ordered = [float(gamma) for gamma in gammas]
    if not ordered:
        raise ValueError("At least one gamma is required.")
    for gamma in ordered:
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"gamma={gamma} must lie in [0, 1).")
    if len(set(ordered)) != len(ordered):
        raise ValueError("Duplicate gamma values in sweep.")
    return sorted(ordered)


def sweep_gamma(
    game: MarkovGame,
    gammas: Iterable[float],
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: Optional[int] = None,
    margin: int = DEFAULT_MARGIN,
) -> SweepTable:
    """Solve the game under each strategy for every discount factor."""

    rows = []
    for gamma in _checked_gammas(gammas):
        variant = game.with_gamma(gamma)
        values = {
            "mmps": solve_mmps(variant, epsilon, max_iterations, margin).values,
            "urs": solve_urs(variant, epsilon, max_iterations, margin).values,
            "optimal": solve_optimal(variant, epsilon, max_iterations, margin).values,
        }
        rows.append(
            SweepRow(gamma, {name: tuple(float(v) for v in vec) for name, vec in values.items()})
        )
        logger.debug("Swept gamma=%g", gamma)

    return SweepTable(state_names=game.state_names, rows=tuple(rows))
