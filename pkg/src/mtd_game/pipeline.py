"""Glue shared by the command line and the HTTP service."""

from __future__ import annotations

import json
from typing import Any, Optional

from .attack_graph import AttackGraphError, load_attack_graph
from .game import (
    DefenderBudget,
    GameBuildError,
    GameValidationError,
    MarkovGame,
    build_game,
    load_monitor_spec,
)
from .matrix_lp import MatrixGameError
from .models import PolicyError
from .simulator import SimulationError
from .vulnerabilities import CatalogError, ExploitSuccessModel, load_catalog

# ValueError also covers malformed JSON and MatrixGameError.
INPUT_ERRORS = (
    AttackGraphError,
    CatalogError,
    GameBuildError,
    GameValidationError,
    MatrixGameError,
    PolicyError,
    SimulationError,
    ValueError,
)


def compile_game(
    graph_document: Any,
    catalog_document: Any,
    costs_document: Any,
    budget: int,
    gamma: float,
    model: ExploitSuccessModel,
    terminal_reward: float = 10.0,
) -> MarkovGame:
    """Parse the three input documents and build the Markov game they describe."""

    catalog = load_catalog(catalog_document)
    graph, partition = load_attack_graph(graph_document, catalog)
    return build_game(
        graph,
        partition,
        catalog,
        load_monitor_spec(costs_document),
        DefenderBudget(budget),
        model,
        gamma,
        terminal_reward,
    )


def dumps(document: Any, indent: Optional[int] = 2) -> str:
    return json.dumps(document, indent=indent, ensure_ascii=False) + "\n"


__all__ = ["INPUT_ERRORS", "compile_game", "dumps"]
