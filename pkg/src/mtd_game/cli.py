"""Command-line front end: build, solve, sweep and simulate Markov games."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, List, Optional, Sequence

from .analysis import sweep_gamma
from .config import SolverConfig
from .deps import get_config, get_success_model
from .game import dump_game, load_game
from .models import MixedPolicy
from .pipeline import INPUT_ERRORS, compile_game, dumps
from .simulator import AttackerMode, RolloutConfig, simulate
from .solver import STRATEGIES, ConvergenceError, solve
from .vulnerabilities import load_success_model

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_CONVERGENCE = 2


def _read_json(path: str) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_gammas(raw: str) -> List[float]:
    try:
        return [float(item) for item in raw.split(",") if item.strip()]
    except ValueError as exc:
        raise ValueError(f"--gammas must be comma-separated numbers, got {raw!r}.") from exc


def _epsilon(args: argparse.Namespace, config: SolverConfig) -> float:
    return args.epsilon if args.epsilon is not None else config.epsilon


def cmd_build(args: argparse.Namespace, config: SolverConfig) -> int:
    model = (
        load_success_model(_read_json(args.success_model))
        if args.success_model
        else get_success_model()
    )
    terminal_reward = (
        args.terminal_reward if args.terminal_reward is not None else config.terminal_reward
    )
    game = compile_game(
        _read_json(args.graph),
        _read_json(args.catalog),
        _read_json(args.costs),
        args.budget,
        args.gamma,
        model,
        terminal_reward,
    )
    _emit(dumps(dump_game(game)), args.out)
    for state in game.states:
        print(
            f"{state.name}: {len(state.defender_actions)} defender x "
            f"{len(state.attacker_actions)} attacker actions",
            file=sys.stderr if not args.out else sys.stdout,
        )
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, config: SolverConfig) -> int:
    game = load_game(Path(args.game).read_text(encoding="utf-8"))
    result = solve(
        game,
        args.strategy,
        _epsilon(args, config),
        config.max_iterations,
        config.iteration_margin,
    )
    document = result.to_document(game)
    if args.out:
        _emit(dumps(document), args.out)
        print("\n".join(document["listing"]))
        for name, value in document["values"].items():
            print(f"V({name}) = {value:.6f}")
    else:
        _emit(dumps(document), None)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: SolverConfig) -> int:
    game = load_game(Path(args.game).read_text(encoding="utf-8"))
    table = sweep_gamma(
        game,
        _parse_gammas(args.gammas),
        _epsilon(args, config),
        config.max_iterations,
        config.iteration_margin,
    )
    _emit(table.to_dat(), args.out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, config: SolverConfig) -> int:
    game = load_game(Path(args.game).read_text(encoding="utf-8"))
    policy = MixedPolicy.from_document(_read_json(args.policy), game)
    rollout = RolloutConfig(
        episodes=args.episodes,
        horizon=args.horizon,
        seed=args.seed,
        attacker=AttackerMode.parse(args.attacker),
    )
    report = simulate(game, policy, rollout)
    _emit(report.to_text(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtd-game",
        description="Compute moving-target IDS placement policies from attack graphs.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="enable debug logs")
    commands = parser.add_subparsers(dest="command", required=True)

    build = commands.add_parser("build", help="compile an attack graph into a game file")
    build.add_argument("--graph", required=True, help="attack graph with its state partition")
    build.add_argument("--catalog", required=True, help="vulnerability catalog")
    build.add_argument("--costs", required=True, help="per-state monitor costs")
    build.add_argument("--budget", type=int, required=True, help="monitors placed per state")
    build.add_argument("--gamma", type=float, required=True, help="discount factor in [0, 1)")
    build.add_argument("--terminal-reward", type=float, default=None)
    build.add_argument("--success-model", help="{easy, medium, high} success probabilities")
    build.add_argument("--out", help="game file to write (default: standard output)")
    build.set_defaults(handler=cmd_build)

    solve_cmd = commands.add_parser("solve", help="solve a game file")
    solve_cmd.add_argument("--game", required=True)
    solve_cmd.add_argument("--strategy", choices=sorted(STRATEGIES), default="optimal")
    solve_cmd.add_argument("--epsilon", type=float, default=None)
    solve_cmd.add_argument("--out", help="policy document to write")
    solve_cmd.set_defaults(handler=cmd_solve)

    sweep = commands.add_parser("sweep", help="tabulate values of all strategies over gamma")
    sweep.add_argument("--game", required=True)
    sweep.add_argument("--gammas", required=True, help="comma-separated discount factors")
    sweep.add_argument("--epsilon", type=float, default=None)
    sweep.add_argument("--out", help=".dat file to write")
    sweep.set_defaults(handler=cmd_sweep)

    sim = commands.add_parser("simulate", help="roll out a policy against an attacker")
    sim.add_argument("--game", required=True)
    sim.add_argument("--policy", required=True, help="policy or solve document")
    sim.add_argument("--episodes", type=int, default=10_000)
    sim.add_argument("--horizon", type=int, default=200)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--attacker", default="best-response")
    sim.add_argument("--out", help="report file to write")
    sim.set_defaults(handler=cmd_simulate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = get_config()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    level = logging.DEBUG if args.verbose else config.log_level
    logging.basicConfig(level=level, stream=sys.stderr)

    try:
        return args.handler(args, config)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (*INPUT_ERRORS, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
