import numpy as np
import pytest

from mtd_game.matrix_lp import (
    CERTIFICATE_TOLERANCE,
    MatrixGame,
    MatrixGameError,
    best_pure_response,
    maximin_pure,
    solve_column_player,
    solve_matrix_game,
)


def test_matching_pennies_has_value_zero_and_even_odds() -> None:
    solution = solve_matrix_game([[1, -1], [-1, 1]])

    assert solution.value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(solution.row_strategy, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(solution.column_strategy, [0.5, 0.5], atol=1e-12)
    assert solution.certificate_holds


def test_mixed_equilibrium_of_a_two_by_two_game() -> None:
    solution = solve_matrix_game(np.array([[3.0, -1.0], [-2.0, 1.0]]))

    assert solution.value == pytest.approx(1 / 7)
    np.testing.assert_allclose(solution.row_strategy, [3 / 7, 4 / 7])


def test_rock_paper_scissors_is_uniform() -> None:
    solution = solve_matrix_game([[0, -1, 1], [1, 0, -1], [-1, 1, 0]])

    assert solution.value == pytest.approx(0.0, abs=1e-10)
    np.testing.assert_allclose(solution.row_strategy, [1 / 3] * 3, atol=1e-10)


def test_dominant_row_is_played_purely() -> None:
    solution = solve_matrix_game([[5, 5], [1, 1]])

    assert solution.value == pytest.approx(5.0)
    np.testing.assert_allclose(solution.row_strategy, [1.0, 0.0])


def test_single_cell_game() -> None:
    solution = solve_matrix_game([[-4.5]])

    assert solution.value == pytest.approx(-4.5)
    assert solution.row_strategy.tolist() == [1.0]


def test_random_games_satisfy_duality_and_certificates() -> None:
    rng = np.random.default_rng(20190517)

    for _ in range(1000):
        rows, cols = rng.integers(1, 7, size=2)
        payoff = rng.uniform(-10.0, 10.0, size=(rows, cols))

        solution = solve_matrix_game(payoff)
        column_value, column_strategy = solve_column_player(payoff)

        assert abs(solution.value - column_value) < 1e-7
        assert solution.certificate_holds
        assert (solution.row_strategy @ payoff).min() >= solution.value - CERTIFICATE_TOLERANCE
        assert (payoff @ column_strategy).max() <= solution.value + CERTIFICATE_TOLERANCE
        assert solution.value >= maximin_pure(payoff)[1] - 1e-9
        assert solution.row_strategy.sum() == pytest.approx(1.0)


def test_best_pure_response_prefers_the_lowest_index_on_ties() -> None:
    column, value = best_pure_response([[1, 0, 0], [0, 1, 1]], [0.5, 0.5])

    assert column == 0
    assert value == pytest.approx(0.5)


def test_best_pure_response_checks_the_strategy_length() -> None:
    with pytest.raises(MatrixGameError, match="does not match"):
        best_pure_response([[1, 2], [3, 4]], [1.0])


def test_maximin_pure_picks_the_best_floor() -> None:
    assert maximin_pure([[0, -3], [-5, 2], [-1, -1]]) == (2, -1.0)


@pytest.mark.parametrize("payoff", [[], [[]], [[1.0, np.nan]], [1.0, 2.0]])
def test_malformed_matrices_are_rejected(payoff) -> None:
    with pytest.raises(MatrixGameError):
        MatrixGame(payoff)
    with pytest.raises(ValueError):
        solve_matrix_game(payoff)


THREE_BY_THREE = np.array([[0, -7, -10], [-2, 5, -10], [-3, -10, 7]], dtype=float)


def _grid_maximin(payoff: np.ndarray, steps: int = 1000) -> float:
    i, j = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1), indexing="ij")
    keep = i + j <= steps
    grid = np.stack([i[keep], j[keep], steps - i[keep] - j[keep]], axis=1) / steps
    return float((grid @ payoff).min(axis=1).max())


def test_three_by_three_monitor_game_agrees_with_dual_and_grid_search() -> None:
    solution = solve_matrix_game(THREE_BY_THREE)
    dual_value, dual_strategy = solve_column_player(THREE_BY_THREE)

    assert solution.value == pytest.approx(dual_value, abs=1e-3)
    assert solution.value == pytest.approx(_grid_maximin(THREE_BY_THREE), abs=1e-3)
    assert solution.value == pytest.approx(-2.35, abs=1e-9)
    np.testing.assert_allclose(solution.row_strategy, [0.05, 0.5, 0.45], atol=1e-9)
    assert (THREE_BY_THREE @ dual_strategy).max() <= solution.value + CERTIFICATE_TOLERANCE
    assert THREE_BY_THREE.min() <= solution.value <= THREE_BY_THREE.max()


def test_best_response_to_uniform_monitoring() -> None:
    column, value = best_pure_response(THREE_BY_THREE, [1 / 3, 1 / 3, 1 / 3])

    assert column == 2
    assert value == pytest.approx(-13 / 3)


def test_best_response_on_matching_pennies() -> None:
    assert best_pure_response([[1, -1], [-1, 1]], [1.0, 0.0]) == (1, -1.0)
    assert best_pure_response([[1, -1], [-1, 1]], [0.5, 0.5]) == (0, 0.0)


def test_maximin_pure_breaks_equal_floors_by_lowest_row() -> None:
    assert maximin_pure(THREE_BY_THREE) == (0, -10.0)
    assert maximin_pure([[5, 5], [1, 1]]) == (0, 5.0)
    assert maximin_pure([[2.5]]) == (0, 2.5)


def test_positive_affine_maps_move_the_value_and_keep_the_strategy() -> None:
    rng = np.random.default_rng(7)

    for _ in range(200):
        rows, cols = rng.integers(1, 6, size=2)
        payoff = rng.uniform(-10.0, 10.0, size=(rows, cols))
        alpha, beta = rng.uniform(0.1, 5.0), rng.uniform(-10.0, 10.0)

        original = solve_matrix_game(payoff)
        mapped = solve_matrix_game(alpha * payoff + beta)

        assert mapped.value == pytest.approx(alpha * original.value + beta, abs=1e-6)
        worst = (original.row_strategy @ (alpha * payoff + beta)).min()
        assert worst >= mapped.value - 1e-6
