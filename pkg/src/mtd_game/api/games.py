"""Game construction, solving and simulation routes."""

from __future__ import annotations

import logging
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional

from fastapi import APIRouter, Depends, HTTPException
from pydantic import BaseModel

from ..analysis import SweepTable, sweep_gamma
from ..config import SolverConfig
from ..deps import get_config, get_success_model
from ..game import MarkovGame, dump_game, load_game
from ..models import MixedPolicy, SolveResult
from ..pipeline import INPUT_ERRORS, compile_game
from ..simulator import AttackerMode, RolloutConfig, RolloutReport, simulate
from ..solver import ConvergenceError, solve
from ..vulnerabilities import ExploitSuccessModel

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/games", tags=["games"])


@contextmanager
def _translated_errors(action: str) -> Iterator[None]:
    try:
        yield
    except ConvergenceError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except INPUT_ERRORS as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except Exception as exc:  # noqa: BLE001
        logger.exception("Unexpected error while trying to %s", action)
        raise HTTPException(status_code=500, detail=f"Unexpected error: {exc}") from exc


class BuildRequest(BaseModel):
    graph: Dict[str, Any]
    catalog: List[Dict[str, Any]]
    costs: Dict[str, Any]
    budget: int
    gamma: float
    terminal_reward: Optional[float] = None


class StateSummaryModel(BaseModel):
    name: str
    defender_actions: int
    attacker_actions: int
    terminal: bool
    goal: bool


class BuildResponseModel(BaseModel):
    game: Dict[str, Any]
    states: List[StateSummaryModel]

    @classmethod
    def from_domain(cls, game: MarkovGame) -> "BuildResponseModel":
        return cls(
            game=dump_game(game),
            states=[
                StateSummaryModel(
                    name=state.name,
                    defender_actions=len(state.defender_actions),
                    attacker_actions=len(state.attacker_actions),
                    terminal=state.terminal,
                    goal=state.goal,
                )
                for state in game.states
            ],
        )


class SolveRequest(BaseModel):
    game: Dict[str, Any]
    strategy: str = "optimal"
    epsilon: Optional[float] = None


class SolveResponseModel(BaseModel):
    strategy: str
    gamma: float
    iterations: int
    residual: float
    values: Dict[str, float]
    policy: Dict[str, Dict[str, float]]
    listing: List[str]

    @classmethod
    def from_domain(cls, result: SolveResult, game: MarkovGame) -> "SolveResponseModel":
        return cls(**result.to_document(game))


class SweepRequest(BaseModel):
    game: Dict[str, Any]
    gammas: List[float]
    epsilon: Optional[float] = None


class SweepResponseModel(BaseModel):
    header: List[str]
    rows: List[Dict[str, float]]
    dat: str

    @classmethod
    def from_domain(cls, table: SweepTable) -> "SweepResponseModel":
        return cls(header=table.header(), rows=table.to_records(), dat=table.to_dat())


class SimulateRequest(BaseModel):
    game: Dict[str, Any]
    policy: Dict[str, Any]
    episodes: int = 10_000
    horizon: int = 200
    seed: int = 0
    attacker: str = "best-response"


class StartStateModel(BaseModel):
    state: str
    mean_return: float
    standard_error: float
    detections: int
    goal_reaches: int


class SimulationResponseModel(BaseModel):
    generator: str
    seed: int
    episodes: int
    horizon: int
    gamma: float
    attacker: str
    truncation_bound: float
    states: List[StartStateModel]

    @classmethod
    def from_domain(cls, report: RolloutReport) -> "SimulationResponseModel":
        return cls(**report.to_document())


def _epsilon(requested: Optional[float], config: SolverConfig) -> float:
    return requested if requested is not None else config.epsilon


@router.post("/build", response_model=BuildResponseModel)
def build_game_endpoint(
    payload: BuildRequest,
    config: SolverConfig = Depends(get_config),
    model: ExploitSuccessModel = Depends(get_success_model),
) -> BuildResponseModel:
    reward = payload.terminal_reward
    with _translated_errors("build a game"):
        game = compile_game(
            payload.graph,
            payload.catalog,
            payload.costs,
            payload.budget,
            payload.gamma,
            model,
            reward if reward is not None else config.terminal_reward,
        )
    return BuildResponseModel.from_domain(game)


@router.post("/solve", response_model=SolveResponseModel)
def solve_game_endpoint(
    payload: SolveRequest,
    config: SolverConfig = Depends(get_config),
) -> SolveResponseModel:
    with _translated_errors("solve a game"):
        game = load_game(payload.game)
        result = solve(
            game,
            payload.strategy,
            _epsilon(payload.epsilon, config),
            config.max_iterations,
            config.iteration_margin,
        )
    return SolveResponseModel.from_domain(result, game)


@router.post("/sweep", response_model=SweepResponseModel)
def sweep_game_endpoint(
    payload: SweepRequest,
    config: SolverConfig = Depends(get_config),
) -> SweepResponseModel:
    with _translated_errors("sweep gamma"):
        table = sweep_gamma(
            load_game(payload.game),
            payload.gammas,
            _epsilon(payload.epsilon, config),
            config.max_iterations,
            config.iteration_margin,
        )
    return SweepResponseModel.from_domain(table)


@router.post("/simulate", response_model=SimulationResponseModel)
def simulate_game_endpoint(payload: SimulateRequest) -> SimulationResponseModel:
    with _translated_errors("simulate a policy"):
        game = load_game(payload.game)
        report = simulate(
            game,
            MixedPolicy.from_document(payload.policy, game),
            RolloutConfig(
                episodes=payload.episodes,
                horizon=payload.horizon,
                seed=payload.seed,
                attacker=AttackerMode.parse(payload.attacker),
            ),
        )
    return SimulationResponseModel.from_domain(report)


__all__ = [
    "router",
    "BuildRequest",
    "BuildResponseModel",
    "SimulateRequest",
    "SimulationResponseModel",
    "SolveRequest",
    "SolveResponseModel",
    "SweepRequest",
    "SweepResponseModel",
]
