"""Zero-sum Markov game model: compilation from attack graphs and game-file I/O."""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from .attack_graph import (
    AttackGraph,
    StatePartition,
    exploit_source_states,
    reachable_exploits,
    validate_partition,
)
from .vulnerabilities import (
    ExploitSuccessModel,
    VulnerabilityCatalog,
    success_probability,
)

logger = logging.getLogger(__name__)

Document = Union[str, bytes, Mapping]

NO_MONITOR = "no-mon"
NO_OPERATION = "no-op"
STOCHASTIC_TOLERANCE = 1e-9


class GameBuildError(Exception):
    """Raised when the inputs cannot be compiled into a Markov game."""


class GameValidationError(Exception):
    """Raised when a game document violates a Markov-game invariant."""

    def __init__(self, problems: Sequence[str]) -> None:
        super().__init__("; ".join(problems))
        self.problems = list(problems)


def _frozen_array(values: Any) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GameState:
    """One matrix game of the Markov game.

    `rewards` is attacker x defender (defender's payoff); `transitions` is
    attacker x defender x next-state.
    `goal` marks the terminal state the attacker is trying to reach.
    """

    name: str
    defender_actions: Tuple[str, ...]
    attacker_actions: Tuple[str, ...]
    rewards: np.ndarray
    transitions: np.ndarray
    terminal: bool = False
    goal: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "defender_actions", tuple(self.defender_actions))
        object.__setattr__(self, "attacker_actions", tuple(self.attacker_actions))
        object.__setattr__(self, "rewards", _frozen_array(self.rewards))
        object.__setattr__(self, "transitions", _frozen_array(self.transitions))


@dataclass(frozen=True, eq=False)
class MarkovGame:
    """Two-player zero-sum Markov game; the defender maximizes."""

    states: Tuple[GameState, ...]
    gamma: float
    _index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(
            self, "_index", {state.name: i for i, state in enumerate(self.states)}
        )

    @property
    def state_names(self) -> Tuple[str, ...]:
        return tuple(state.name for state in self.states)

    def index_of(self, name: str) -> int:
        return self._index[name]

    def state(self, name: str) -> GameState:
        return self.states[self._index[name]]

    @property
    def reward_bound(self) -> float:
        """Largest absolute stage reward."""
        return max(
            (float(np.abs(s.rewards).max()) for s in self.states if s.rewards.size), default=0.0
        )

    def with_gamma(self, gamma: float) -> "MarkovGame":
        return replace(self, gamma=gamma)

    def detection_mask(self, index: int) -> np.ndarray:
        """Boolean attacker x defender mask of cells where an attack is thwarted in state `index`.

        A cell counts as a detection when it keeps the game in place with certainty while the
        same attacker action escapes the state against some other defender action.
        """
        stay = self.states[index].transitions[:, :, index]
        certain = np.isclose(stay, 1.0, atol=1e-12)
        escapes = (stay < 1.0 - 1e-12).any(axis=1, keepdims=True)
        return certain & escapes


@dataclass(frozen=True, slots=True)
class Monitor:
    name: str
    exploit: str
    cost: float

    def __post_init__(self) -> None:
        if self.cost < 0:
            raise GameBuildError(f"Monitor {self.name} has negative cost {self.cost}.")


@dataclass(frozen=True)
class MonitorSpec:
    """Per-state monitor catalogue; costs are state-specific."""

    monitors: Mapping[str, Tuple[Monitor, ...]]

    def for_state(self, state_id: str) -> Tuple[Monitor, ...]:
        return tuple(self.monitors.get(state_id, ()))


@dataclass(frozen=True, slots=True)
class DefenderBudget:
    k: int

    def __post_init__(self) -> None:
        if self.k < 0:
            raise GameBuildError(f"Defender budget must be non-negative, got {self.k}.")


def _decode(document: Document) -> Mapping:
    if isinstance(document, (str, bytes)):
        try:
            payload = json.loads(document)
        except json.JSONDecodeError as exc:
            raise GameValidationError([f"Malformed document: {exc}"]) from exc
    else:
        payload = document
    if not isinstance(payload, Mapping):
        raise GameValidationError(["Document must be an object."])
    return payload


def load_monitor_spec(document: Document) -> MonitorSpec:
    """Parse a costs file of the form `{state: [{monitor, exploit, cost}, ...]}`."""

    try:
        payload = _decode(document)
    except GameValidationError as exc:
        raise GameBuildError(str(exc)) from exc

    monitors: Dict[str, Tuple[Monitor, ...]] = {}
    for state_id, entries in payload.items():
        if not isinstance(entries, list):
            raise GameBuildError(f"Monitors of state '{state_id}' must be an array.")
        parsed: List[Monitor] = []
        for index, entry in enumerate(entries):
            if not isinstance(entry, Mapping) or not {"monitor", "exploit", "cost"} <= entry.keys():
                raise GameBuildError(
                    f"{state_id}[{index}]: monitor needs 'monitor', 'exploit' and 'cost'."
                )
            try:
                cost = float(entry["cost"])
            except (TypeError, ValueError) as exc:
                raise GameBuildError(f"{state_id}[{index}]: cost must be a number.") from exc
            parsed.append(
                Monitor(name=str(entry["monitor"]), exploit=str(entry["exploit"]), cost=cost)
            )
        monitors[str(state_id)] = tuple(parsed)
    return MonitorSpec(monitors)


def validate_game(game: MarkovGame) -> List[str]:
    """Check every Markov-game invariant; an empty report means the game is valid."""

    report: List[str] = []
    if not 0.0 <= game.gamma < 1.0:
        report.append(f"discount: gamma={game.gamma} must lie in [0, 1)")
    if len(set(game.state_names)) != len(game.states):
        report.append("duplicate state names")
    if not game.states:
        report.append("game has no states")

    n_states = len(game.states)
    for index, state in enumerate(game.states):
        where = f"state '{state.name}'"
        m, n = len(state.attacker_actions), len(state.defender_actions)
        if m == 0 or n == 0:
            report.append(f"{where}: both players need at least one action")
            continue
        if len(set(state.attacker_actions)) != m or len(set(state.defender_actions)) != n:
            report.append(f"{where}: duplicate action names")
        if state.rewards.shape != (m, n):
            report.append(f"{where}: reward matrix shape {state.rewards.shape} != {(m, n)}")
        elif not np.isfinite(state.rewards).all():
            report.append(f"{where}: non-finite reward")
        if state.transitions.shape != (m, n, n_states):
            report.append(
                f"{where}: transition tensor shape {state.transitions.shape} != {(m, n, n_states)}"
            )
            continue
        if (state.transitions < 0).any() or not np.isfinite(state.transitions).all():
            report.append(f"{where}: negative or non-finite transition probability")
        sums = state.transitions.sum(axis=2)
        for a2, a1 in zip(*np.nonzero(np.abs(sums - 1.0) > STOCHASTIC_TOLERANCE)):
            report.append(
                f"{where}: transitions of ({state.attacker_actions[a2]}, "
                f"{state.defender_actions[a1]}) sum to {sums[a2, a1]:.6g}, not 1"
            )
        if state.terminal:
            if (m, n) != (1, 1):
                report.append(f"{where}: terminal state must have one action per player")
            elif not np.isclose(state.transitions[0, 0, index], 1.0, atol=STOCHASTIC_TOLERANCE):
                report.append(f"{where}: terminal state must loop on itself")
        elif state.goal:
            report.append(f"{where}: goal state must be terminal")
    return report


def _matrix(raw: Any, rows: int, cols: int, where: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != rows:
        raise GameValidationError([f"{where}: rewards need {rows} rows (one per attacker action)"])
    for row in raw:
        if not isinstance(row, list) or len(row) != cols:
            raise GameValidationError(
                [f"{where}: ragged reward matrix, each row needs {cols} entries"]
            )
    try:
        return np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise GameValidationError([f"{where}: rewards must be numbers"]) from exc


def _tensor(
    raw: Any,
    attacker: Sequence[str],
    defender: Sequence[str],
    index: Dict[str, int],
    self_index: int,
    terminal: bool,
    where: str,
) -> np.ndarray:
    tensor = np.zeros((len(attacker), len(defender), len(index)))
    if raw is None and terminal:
        tensor[:, :, self_index] = 1.0
        return tensor
    if not isinstance(raw, Mapping):
        raise GameValidationError([f"{where}: 'transitions' must map attacker actions"])
    for unknown in set(raw) - set(attacker):
        raise GameValidationError([f"{where}: transition for unknown attacker action '{unknown}'"])
    for i, a2 in enumerate(attacker):
        row = raw.get(a2)
        if not isinstance(row, Mapping):
            raise GameValidationError([f"{where}: missing transitions for '{a2}'"])
        for unknown in set(row) - set(defender):
            raise GameValidationError(
                [f"{where}: transition for unknown defender action '{unknown}'"]
            )
        for j, a1 in enumerate(defender):
            targets = row.get(a1)
            if not isinstance(targets, Mapping):
                raise GameValidationError([f"{where}: missing transition for ({a2}, {a1})"])
            for target, prob in targets.items():
                if target not in index:
                    raise GameValidationError(
                        [f"{where}: ({a2}, {a1}) refers to unknown state '{target}'"]
                    )
                try:
                    tensor[i, j, index[target]] += float(prob)
                except (TypeError, ValueError) as exc:
                    raise GameValidationError(
                        [f"{where}: ({a2}, {a1}) -> '{target}' probability must be a number"]
                    ) from exc
    return tensor


def _action_names(raw: Mapping, key: str, default: List[str], where: str) -> List[str]:
    names = raw.get(key, default)
    if not isinstance(names, list):
        raise GameValidationError([f"{where}: '{key}' must be an array"])
    return [str(name) for name in names]


def load_game(document: Document) -> MarkovGame:
    """Load a hand-written game file verbatim and verify its invariants."""

    payload = _decode(document)
    raw_states = payload.get("states")
    if not isinstance(raw_states, list) or not raw_states:
        raise GameValidationError(["'states' must be a non-empty array"])
    if "gamma" not in payload:
        raise GameValidationError(["'gamma' is required"])

    names = [str(raw.get("name", "")) if isinstance(raw, Mapping) else "" for raw in raw_states]
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names) or "" in index:
        raise GameValidationError(["every state needs a unique 'name'"])

    states: List[GameState] = []
    for i, raw in enumerate(raw_states):
        where = f"state '{names[i]}'"
        terminal = bool(raw.get("terminal", False))
        goal = bool(raw.get("goal", terminal))
        defender = _action_names(raw, "defender_actions", [NO_MONITOR] if terminal else [], where)
        attacker = _action_names(raw, "attacker_actions", [NO_OPERATION] if terminal else [], where)
        states.append(
            GameState(
                name=names[i],
                defender_actions=tuple(defender),
                attacker_actions=tuple(attacker),
                rewards=_matrix(raw.get("rewards"), len(attacker), len(defender), where),
                transitions=_tensor(
                    raw.get("transitions"), attacker, defender, index, i, terminal, where
                ),
                terminal=terminal,
                goal=goal,
            )
        )

    try:
        gamma = float(payload["gamma"])
    except (TypeError, ValueError) as exc:
        raise GameValidationError(["'gamma' must be a number"]) from exc

    game = MarkovGame(states=tuple(states), gamma=gamma)
    problems = validate_game(game)
    if problems:
        raise GameValidationError(problems)
    return game


def dump_game(game: MarkovGame) -> Dict[str, Any]:
    """Render a game as the document `load_game` accepts."""

    names = game.state_names
    states: List[Dict[str, Any]] = []
    for state in game.states:
        transitions: Dict[str, Dict[str, Dict[str, float]]] = {}
        for i, a2 in enumerate(state.attacker_actions):
            transitions[a2] = {
                a1: {
                    names[k]: float(state.transitions[i, j, k])
                    for k in np.nonzero(state.transitions[i, j])[0]
                }
                for j, a1 in enumerate(state.defender_actions)
            }
        states.append(
            {
                "name": state.name,
                "terminal": state.terminal,
                "goal": state.goal,
                "defender_actions": list(state.defender_actions),
                "attacker_actions": list(state.attacker_actions),
                "rewards": state.rewards.tolist(),
                "transitions": transitions,
            }
        )
    return {"gamma": game.gamma, "states": states}


def _attacker_labels(exploits: Sequence[Tuple[Any, str]]) -> List[str]:
    labels = [exploit.label for exploit, _ in exploits]
    clashes = {label for label in labels if labels.count(label) > 1}
    return [
        f"{exploit.label}[{exploit.id}]" if exploit.label in clashes else exploit.label
        for exploit, _ in exploits
    ]


def build_game(
    graph: AttackGraph,
    partition: StatePartition,
    catalog: VulnerabilityCatalog,
    monitors: MonitorSpec,
    budget: DefenderBudget,
    model: ExploitSuccessModel,
    gamma: float,
    terminal_reward: float = 10.0,
) -> MarkovGame:
    """Compile an attack graph and its partition into a zero-sum Markov game."""

    problems = validate_partition(graph, partition)
    if problems:
        raise GameBuildError("Invalid partition: " + "; ".join(problems))
    if not 0.0 <= gamma < 1.0:
        raise GameBuildError(f"gamma={gamma} must lie in [0, 1).")

    for exploit in graph.exploits:
        sources = exploit_source_states(graph, partition, exploit.id)
        if len(sources) > 1:
            raise GameBuildError(
                f"Exploit '{exploit.id}' has preconditions spanning states {', '.join(sources)}."
            )

    unknown_states = set(monitors.monitors) - set(partition.state_ids)
    if unknown_states:
        listed = ", ".join(sorted(unknown_states))
        raise GameBuildError(f"Monitors reference unknown states: {listed}.")

    names = partition.state_ids
    index = {name: i for i, name in enumerate(names)}
    states: List[GameState] = []

    for position, part in enumerate(partition.states):
        is_goal = part.state_id == partition.goal_state
        if part.terminal or is_goal:
            reward = -terminal_reward if is_goal else 0.0
            loop = np.zeros((1, 1, len(names)))
            loop[0, 0, position] = 1.0
            states.append(
                GameState(
                    part.state_id, (NO_MONITOR,), (NO_OPERATION,), [[reward]], loop, True, is_goal
                )
            )
            continue

        exploits = reachable_exploits(graph, partition, part.state_id)
        for exploit, _ in exploits:
            if exploit.cve not in catalog:
                raise GameBuildError(f"unresolved CVE {exploit.cve} (exploit '{exploit.id}').")
        available = {exploit.id for exploit, _ in exploits}

        state_monitors = monitors.for_state(part.state_id)
        for monitor in state_monitors:
            if monitor.exploit not in available:
                raise GameBuildError(
                    f"Monitor {monitor.name} in state '{part.state_id}' watches "
                    f"'{monitor.exploit}', which is not available there."
                )

        k = budget.k
        if k > len(state_monitors):
            logger.warning(
                "Budget %d exceeds the %d monitors of state %s; clamping.",
                k,
                len(state_monitors),
                part.state_id,
            )
            k = len(state_monitors)

        subsets = [
            subset
            for size in range(k + 1)
            for subset in combinations(range(len(state_monitors)), size)
        ]
        defender = [
            "+".join(state_monitors[i].name for i in subset) if subset else NO_MONITOR
            for subset in subsets
        ]
        attacker = [NO_OPERATION] + _attacker_labels(exploits)

        rewards = np.zeros((len(attacker), len(defender)))
        transitions = np.zeros((len(attacker), len(defender), len(names)))
        transitions[0, :, position] = 1.0

        for j, subset in enumerate(subsets):
            spent = sum(state_monitors[i].cost for i in subset)
            watched = {state_monitors[i].exploit for i in subset}
            rewards[0, j] = -spent
            for row, (exploit, successor) in enumerate(exploits, start=1):
                impact = catalog[exploit.cve].impact
                if exploit.id in watched:
                    rewards[row, j] = impact - spent
                    transitions[row, j, position] = 1.0
                else:
                    rewards[row, j] = -impact - spent
                    p = success_probability(model, catalog[exploit.cve])
                    transitions[row, j, index[successor]] += p
                    transitions[row, j, position] += 1.0 - p

        states.append(
            GameState(part.state_id, tuple(defender), tuple(attacker), rewards, transitions)
        )

    game = MarkovGame(states=tuple(states), gamma=gamma)
    problems = validate_game(game)
    if problems:
        raise GameValidationError(problems)
    logger.info(
        "Built game with %d states (%s defender actions)",
        len(game.states),
        ", ".join(f"{s.name}:{len(s.defender_actions)}" for s in game.states),
    )
    return game


__all__ = [
    "DefenderBudget",
    "GameBuildError",
    "GameState",
    "GameValidationError",
    "MarkovGame",
    "Monitor",
    "MonitorSpec",
    "NO_MONITOR",
    "NO_OPERATION",
    "build_game",
    "dump_game",
    "load_game",
    "load_monitor_spec",
    "validate_game",
]
