import json
from pathlib import Path
from typing import Any

import pytest

from mtd_game.game import DefenderBudget, MarkovGame, build_game, load_game, load_monitor_spec
from mtd_game.attack_graph import load_attack_graph
from mtd_game.vulnerabilities import ExploitSuccessModel, load_catalog

FIXTURES = Path(__file__).parent / "fixtures"


def read_fixture(name: str) -> Any:
    return json.loads((FIXTURES / name).read_text(encoding="utf-8"))


def build_fixture_game(prefix: str, budget: int, gamma: float = 0.8) -> MarkovGame:
    catalog = load_catalog(read_fixture(f"{prefix}_catalog.json"))
    graph, partition = load_attack_graph(read_fixture(f"{prefix}_graph.json"), catalog)
    return build_game(
        graph,
        partition,
        catalog,
        load_monitor_spec(read_fixture(f"{prefix}_costs.json")),
        DefenderBudget(budget),
        ExploitSuccessModel(),
        gamma,
    )


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def table_game() -> MarkovGame:
    return load_game(read_fixture("reward_table_game.json"))


@pytest.fixture
def three_tier_game() -> MarkovGame:
    return build_fixture_game("three_tier", budget=1)


@pytest.fixture
def apt_game() -> MarkovGame:
    return build_fixture_game("apt", budget=2)
