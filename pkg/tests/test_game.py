import copy
import logging

import numpy as np
import pytest

from mtd_game.attack_graph import load_attack_graph
from mtd_game.game import (
    NO_MONITOR,
    DefenderBudget,
    GameBuildError,
    GameValidationError,
    build_game,
    dump_game,
    load_game,
    load_monitor_spec,
    validate_game,
)
from mtd_game.vulnerabilities import ExploitSuccessModel, load_catalog

from conftest import build_fixture_game, read_fixture


def _inputs(prefix: str = "three_tier"):
    catalog = load_catalog(read_fixture(f"{prefix}_catalog.json"))
    graph, partition = load_attack_graph(read_fixture(f"{prefix}_graph.json"))
    monitors = load_monitor_spec(read_fixture(f"{prefix}_costs.json"))
    return graph, partition, catalog, monitors


def test_reward_tables_load_verbatim(table_game) -> None:
    s0, s1, s2, s3 = table_game.states

    np.testing.assert_array_equal(s0.rewards, [[0, -3], [-5, 5]])
    np.testing.assert_array_equal(s1.rewards, [[0, -2, -3], [-7, 5, -10], [-10, -10, 7]])
    np.testing.assert_array_equal(s2.rewards, [[0, -2], [-10, 8]])
    np.testing.assert_array_equal(s3.rewards, [[-10]])
    exp_ftp, mon_ftp = s1.attacker_actions.index("exp-FTP"), s1.defender_actions.index("mon-FTP")
    assert s1.rewards[exp_ftp, mon_ftp] == 7
    assert s3.terminal
    assert s3.defender_actions == (NO_MONITOR,)
    assert s3.transitions[0, 0, 3] == 1.0


def test_build_game_applies_the_impact_and_cost_reward_rule(three_tier_game) -> None:
    game = three_tier_game

    assert game.state_names == ("s0", "s1", "s2", "s3")
    s1 = game.state("s1")
    assert s1.defender_actions == ("no-mon", "mon-Web", "mon-FTP")
    assert s1.attacker_actions == ("no-op", "exp-Web", "exp-FTP")
    np.testing.assert_allclose(s1.rewards, [[0, -2, -3], [-7, 5, -10], [-10, -12, 7]])
    np.testing.assert_allclose(game.state("s0").rewards, [[0, -3], [-5, 2]])
    np.testing.assert_allclose(game.state("s2").rewards, [[0, -2], [-10, 8]])
    np.testing.assert_allclose(game.state("s3").rewards, [[-10]])
    assert game.reward_bound == 12


def test_build_game_transitions_use_access_complexity(three_tier_game) -> None:
    s1 = three_tier_game.state("s1")
    web, ftp = 1, 2

    np.testing.assert_allclose(s1.transitions[web, 0], [0, 0.2, 0.8, 0])
    np.testing.assert_allclose(s1.transitions[web, 1], [0, 1, 0, 0])
    np.testing.assert_allclose(s1.transitions[ftp, 1], [0, 0.5, 0, 0.5])
    np.testing.assert_allclose(s1.transitions[0, 2], [0, 1, 0, 0])
    assert validate_game(three_tier_game) == []


def test_detection_mask_marks_monitored_exploits(three_tier_game) -> None:
    mask = three_tier_game.detection_mask(1)

    assert mask.tolist() == [
        [False, False, False],
        [False, True, False],
        [False, False, True],
    ]


def test_zero_budget_leaves_only_no_monitor() -> None:
    game = build_fixture_game("three_tier", budget=0)

    assert all(state.defender_actions == (NO_MONITOR,) for state in game.states)


def test_budget_above_monitor_count_is_clamped_with_a_warning(caplog) -> None:
    with caplog.at_level(logging.WARNING, logger="mtd_game.game"):
        game = build_fixture_game("three_tier", budget=2)

    assert game.state("s1").defender_actions == (
        "no-mon",
        "mon-Web",
        "mon-FTP",
        "mon-Web+mon-FTP",
    )
    assert game.state("s0").defender_actions == ("no-mon", "mon-LDAP")
    assert any("clamping" in record.message for record in caplog.records)


def test_apt_case_study_has_sixteen_placements_for_two_of_five_monitors(apt_game) -> None:
    s2 = apt_game.state("s2")

    assert len(s2.defender_actions) == 16
    assert s2.defender_actions[:6] == (
        "no-mon",
        "mon-IIS",
        "mon-RPC",
        "mon-EOL",
        "mon-FTP",
        "mon-SSL",
    )
    assert s2.defender_actions[6] == "mon-IIS+mon-RPC"
    assert s2.attacker_actions == ("no-op", "exp-EOL", "exp-FTP", "exp-IIS", "exp-RPC", "exp-SSL")
    both = s2.defender_actions.index("mon-RPC+mon-SSL")
    assert s2.rewards[0, both] == -3


def test_clashing_exploit_labels_get_the_node_id() -> None:
    graph_doc = read_fixture("three_tier_graph.json")
    graph_doc["nodes"][6]["label"] = "exp-FTP"
    catalog = load_catalog(read_fixture("three_tier_catalog.json"))
    graph, partition = load_attack_graph(graph_doc, catalog)

    game = build_game(
        graph,
        partition,
        catalog,
        load_monitor_spec(read_fixture("three_tier_costs.json")),
        DefenderBudget(1),
        ExploitSuccessModel(),
        0.8,
    )

    assert game.state("s1").attacker_actions == (
        "no-op",
        "exp-FTP[x2-web]",
        "exp-FTP[x3-ftp-from-ldap]",
    )


def test_build_game_reports_missing_catalog_entries() -> None:
    graph, partition, catalog, monitors = _inputs()
    partial = load_catalog(read_fixture("three_tier_catalog.json")[:2])

    with pytest.raises(GameBuildError, match="unresolved CVE CVE-2015-3306"):
        build_game(
            graph, partition, partial, monitors, DefenderBudget(1), ExploitSuccessModel(), 0.8
        )


def test_build_game_rejects_monitors_for_unavailable_exploits() -> None:
    graph, partition, catalog, _ = _inputs()
    costs = read_fixture("three_tier_costs.json")
    costs["s0"].append({"monitor": "mon-Web", "exploit": "x2-web", "cost": 1})

    with pytest.raises(GameBuildError, match="not available"):
        build_game(
            graph,
            partition,
            catalog,
            load_monitor_spec(costs),
            DefenderBudget(1),
            ExploitSuccessModel(),
            0.8,
        )


def test_build_game_rejects_unknown_monitor_states_and_bad_gamma() -> None:
    graph, partition, catalog, _ = _inputs()
    model = ExploitSuccessModel()

    with pytest.raises(GameBuildError, match="unknown states: s9"):
        build_game(
            graph,
            partition,
            catalog,
            load_monitor_spec({"s9": []}),
            DefenderBudget(1),
            model,
            0.8,
        )
    with pytest.raises(GameBuildError, match="gamma"):
        build_game(graph, partition, catalog, load_monitor_spec({}), DefenderBudget(1), model, 1.0)


def test_dumped_game_loads_back_unchanged(three_tier_game) -> None:
    again = load_game(dump_game(three_tier_game))

    assert again.state_names == three_tier_game.state_names
    assert again.gamma == three_tier_game.gamma
    for left, right in zip(again.states, three_tier_game.states):
        assert left.defender_actions == right.defender_actions
        assert left.attacker_actions == right.attacker_actions
        np.testing.assert_array_equal(left.rewards, right.rewards)
        np.testing.assert_array_equal(left.transitions, right.transitions)
        assert left.terminal == right.terminal
        assert left.goal == right.goal


def test_load_game_reports_non_stochastic_rows() -> None:
    document = read_fixture("reward_table_game.json")
    document["states"][2]["transitions"]["exp-FTP"]["no-mon"] = {"s3": 0.5, "s2": 0.4}

    with pytest.raises(GameValidationError, match="sum to 0.9, not 1") as info:
        load_game(document)
    assert len(info.value.problems) == 1


def test_load_game_rejects_terminal_states_with_choices() -> None:
    document = read_fixture("reward_table_game.json")
    document["states"][3] = {
        "name": "s3",
        "terminal": True,
        "defender_actions": ["no-mon", "mon-FTP"],
        "attacker_actions": ["no-op"],
        "rewards": [[-10, -12]],
    }

    with pytest.raises(GameValidationError, match="one action per player"):
        load_game(document)


def test_load_game_rejects_unknown_transition_targets() -> None:
    document = copy.deepcopy(read_fixture("reward_table_game.json"))
    document["states"][0]["transitions"]["no-op"]["no-mon"] = {"s7": 1.0}

    with pytest.raises(GameValidationError, match="unknown state 's7'"):
        load_game(document)


def test_with_gamma_keeps_the_matrices(table_game) -> None:
    variant = table_game.with_gamma(0.5)

    assert variant.gamma == 0.5
    assert variant.states == table_game.states


def _monitor_sets(state):
    return [
        frozenset() if name == NO_MONITOR else frozenset(name.split("+"))
        for name in state.defender_actions
    ]


def _watched_rows(graph, monitors, state):
    """Attacker row of each monitor's exploit, keyed by monitor name."""
    return {
        monitor.name: state.attacker_actions.index(graph.node(monitor.exploit).label)
        for monitor in monitors
    }


@pytest.mark.parametrize(("prefix", "budget"), [("three_tier", 1), ("apt", 2)])
def test_monitoring_an_exploit_beats_leaving_it_open(prefix, budget) -> None:
    graph, partition, _, monitors = _inputs(prefix)
    game = build_fixture_game(prefix, budget=budget)

    for state in game.states:
        if state.terminal:
            continue
        unmonitored = _monitor_sets(state).index(frozenset())
        for name, row in _watched_rows(graph, monitors.for_state(state.name), state).items():
            single = state.defender_actions.index(name)
            assert state.rewards[row, single] > state.rewards[row, unmonitored], (state.name, name)


def test_extra_monitors_leave_a_detected_exploit_in_place(apt_game) -> None:
    graph, _, _, monitors = _inputs("apt")
    s2 = apt_game.state("s2")
    position = apt_game.index_of("s2")
    rows = _watched_rows(graph, monitors.for_state("s2"), s2)
    sets = _monitor_sets(s2)

    checked = 0
    for small, small_set in enumerate(sets):
        for large, large_set in enumerate(sets):
            if not small_set < large_set:
                continue
            for name in small_set:
                row = rows[name]
                np.testing.assert_array_equal(
                    s2.transitions[row, small], s2.transitions[row, large]
                )
                assert s2.transitions[row, large, position] == 1.0
                checked += 1
    assert checked == 20


def test_monitor_declaration_order_only_permutes_defender_actions() -> None:
    costs = read_fixture("apt_costs.json")
    costs["s2"] = list(reversed(costs["s2"]))
    catalog = load_catalog(read_fixture("apt_catalog.json"))
    graph, partition = load_attack_graph(read_fixture("apt_graph.json"), catalog)
    shuffled = build_game(
        graph,
        partition,
        catalog,
        load_monitor_spec(costs),
        DefenderBudget(2),
        ExploitSuccessModel(),
        0.8,
    )
    original = build_fixture_game("apt", budget=2)

    left, right = original.state("s2"), shuffled.state("s2")
    assert left.defender_actions != right.defender_actions
    assert left.attacker_actions == right.attacker_actions
    right_columns = {subset: j for j, subset in enumerate(_monitor_sets(right))}
    assert set(right_columns) == set(_monitor_sets(left))
    for i, subset in enumerate(_monitor_sets(left)):
        j = right_columns[subset]
        np.testing.assert_array_equal(left.rewards[:, i], right.rewards[:, j])
        np.testing.assert_array_equal(left.transitions[:, i], right.transitions[:, j])


def test_exploit_with_preconditions_in_two_states_is_rejected() -> None:
    document = read_fixture("three_tier_graph.json")
    document["nodes"].append(
        {"id": "x5-pivot", "kind": "exploit", "label": "exp-Pivot", "cve": "CVE-2016-5195"}
    )
    document["edges"] += [
        {"from": "p-ldap-user", "to": "x5-pivot", "kind": "post"},
        {"from": "p-ldap-root", "to": "x5-pivot", "kind": "post"},
        {"from": "x5-pivot", "to": "p-web-root", "kind": "pre"},
    ]
    catalog = load_catalog(read_fixture("three_tier_catalog.json"))
    graph, partition = load_attack_graph(document, catalog)

    with pytest.raises(GameBuildError, match="x5-pivot' has preconditions spanning states s0, s1"):
        build_game(
            graph,
            partition,
            catalog,
            load_monitor_spec(read_fixture("three_tier_costs.json")),
            DefenderBudget(1),
            ExploitSuccessModel(),
            0.8,
        )


def test_whole_graph_as_one_state_builds_a_single_goal_state() -> None:
    document = read_fixture("three_tier_graph.json")
    grey = [node["id"] for node in document["nodes"] if node["kind"] != "exploit"]
    document["partition"] = [{"state": "net", "members": grey}]
    catalog = load_catalog(read_fixture("three_tier_catalog.json"))
    graph, partition = load_attack_graph(document, catalog)

    game = build_game(
        graph,
        partition,
        catalog,
        load_monitor_spec({}),
        DefenderBudget(1),
        ExploitSuccessModel(),
        0.8,
    )

    (state,) = game.states
    assert state.terminal and state.goal
    np.testing.assert_array_equal(state.rewards, [[-10.0]])


def test_non_numeric_monitor_cost_is_a_build_error() -> None:
    costs = read_fixture("three_tier_costs.json")
    costs["s0"][0]["cost"] = None

    with pytest.raises(GameBuildError, match=r"s0\[0\]: cost must be a number"):
        load_monitor_spec(costs)


@pytest.mark.parametrize(
    ("mutate", "message"),
    [
        (
            lambda doc: doc["states"][0]["transitions"]["no-op"].update({"no-mon": {"s0": None}}),
            "probability must be a number",
        ),
        (lambda doc: doc["states"][1].update({"defender_actions": 3}), "must be an array"),
        (lambda doc: doc["states"][0]["rewards"][1].__setitem__(0, "high"), "must be numbers"),
    ],
)
def test_load_game_reports_wrongly_typed_fields(mutate, message) -> None:
    document = copy.deepcopy(read_fixture("reward_table_game.json"))
    mutate(document)

    with pytest.raises(GameValidationError, match=message):
        load_game(document)


def test_goal_flag_defaults_to_terminal_and_dead_ends_can_opt_out() -> None:
    document = copy.deepcopy(read_fixture("reward_table_game.json"))
    assert load_game(document).state("s3").goal

    document["states"][3]["goal"] = False
    assert not load_game(document).state("s3").goal

    document["states"][2]["goal"] = True
    with pytest.raises(GameValidationError, match="goal state must be terminal"):
        load_game(document)
