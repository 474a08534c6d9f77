import numpy as np
import pytest

from conftest import ALL_SOLVERS, random_small_games
from HarnessModule import GAME_CLASSES, GenSpec, gen_random_game
from ParityGameModule import ParityGame, UnknownSolverError
from SolverRegistry import SOLVERS, get_solver, make_solver, solve_game


def test_registry_names():
    assert tuple(SOLVERS) == ALL_SOLVERS
    for name, cls in SOLVERS.items():
        assert cls.name == name


def test_unknown_solver():
    with pytest.raises(UnknownSolverError):
        get_solver("magic")


def test_workers_only_for_zielonka(two_cycle):
    assert make_solver("zlk", two_cycle, workers=3).workers == 3
    assert make_solver("pp", two_cycle, workers=3).name == "pp"


def test_empty_game():
    result = solve_game(ParityGame([], [], []), "zlk", check=True)
    assert result.solution.n == 0
    assert result.verified


def test_preprocessing_alone_solves(choice_game):
    result = solve_game(choice_game, "spm", check=True)
    assert result.solution.winner.tolist() == [1, 0, 1, 1]
    assert result.verified
    assert "lifts" not in result.stats


def test_inflate_and_compress_exclude_each_other(two_cycle):
    with pytest.raises(ValueError):
        solve_game(two_cycle, inflate=True, compress=True)


@pytest.mark.parametrize("solver", ALL_SOLVERS)
@pytest.mark.parametrize("options", [
    {},
    {"loops": False, "wcwc": False, "single": False},
    {"scc": True, "inflate": True},
    {"scc": True, "compress": True, "loops": False},
])
def test_pipeline_matches_oracle(solver, options, oracle_games):
    for game, expected in oracle_games[:60]:
        result = solve_game(game, solver, check=True, **options)
        assert np.array_equal(result.solution.winner, expected.winner)
        assert result.verified, result.violations


def test_solvers_agree_on_medium_games():
    for game_class in GAME_CLASSES:
        for seed in range(3):
            game = gen_random_game(GenSpec.for_class(game_class, 24, seed))
            winners = {}
            for solver in ALL_SOLVERS:
                result = solve_game(game, solver, check=True, loops=False, wcwc=False, single=False)
                assert result.verified
                winners[solver] = result.solution.winner
            assert all(np.array_equal(w, winners["zlk"]) for w in winners.values())


@pytest.mark.slow
def test_oracle_equivalence_at_scale():
    from HarnessModule import brute_force_solve

    for game in random_small_games(1000, seed=2024, max_profiles=10 ** 7):
        expected = brute_force_solve(game).winner
        for solver in ALL_SOLVERS:
            result = solve_game(game, solver, check=True, loops=False, wcwc=False, single=False)
            assert result.verified
            assert np.array_equal(result.solution.winner, expected)


@pytest.mark.slow
@pytest.mark.parametrize("n", [100, 200, 500, 1000])
def test_cross_solver_agreement_at_scale(n):
    for game_class in GAME_CLASSES:
        for seed in range(10):
            game = gen_random_game(GenSpec.for_class(game_class, n, seed))
            reference = solve_game(game, "zlk", check=True).solution.winner
            for solver in ALL_SOLVERS[1:]:
                result = solve_game(game, solver, check=True)
                assert result.verified
                assert np.array_equal(result.solution.winner, reference)
