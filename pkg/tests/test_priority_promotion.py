import numpy as np
import pytest

from conftest import random_small_games
from HarnessModule import GenSpec, gen_random_game
from ParityGameModule import Attractor, ParityGame, ParityGameError, normalize
from PriorityPromotionModule import (BOT, DOMINION, ESCAPES, OPEN, VARIANTS, PriorityPromotionSolver,
                                     RegionStatus, pp_solve)
from VerifierModule import verify
from ZielonkaModule import zielonka_solve


def _fresh(game, variant="pp"):
    solver = PriorityPromotionSolver(game, variant)
    solver.region = [BOT] * game.n
    return solver


def test_unknown_variant(two_cycle):
    with pytest.raises(ParityGameError):
        PriorityPromotionSolver(two_cycle, "fast")


def test_empty_game():
    assert pp_solve(ParityGame([], [], [])).n == 0


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("owner", [0, 1])
def test_self_loops(variant, owner):
    assert pp_solve(ParityGame([2], [owner], [[0]]), variant=variant).winner.tolist() == [0]
    assert pp_solve(ParityGame([1], [owner], [[0]]), variant=variant).winner.tolist() == [1]


def test_first_region_is_top_attractor():
    for seed in range(10):
        game, _ = normalize(gen_random_game(GenSpec.for_class("lowdeg", 40, seed)))
        solver = _fresh(game)
        built = solver.decompose()
        top = game.max_priority
        assert built[0] == top
        expected = Attractor(game).run(np.ones(game.n, dtype=bool), top & 1, game.priority == top)
        assert solver.members(top) == np.flatnonzero(expected).tolist()


def test_decompose_covers_everything():
    game, _ = normalize(gen_random_game(GenSpec.for_class("steady", 60, 2)))
    solver = _fresh(game)
    built = solver.decompose()
    assert built == sorted(built, reverse=True)
    assert all(r >= 0 for r in solver.region)
    assert sorted(set(solver.region)) == sorted(set(built))


def test_decompose_stops_at_first_closed_region(choice_game):
    solver = _fresh(choice_game)
    assert solver.decompose(stop=lambda m: solver.region_status(m).kind != OPEN) == [4]
    assert solver.members(4) == [1]
    assert solver.region[0] == BOT
    solver = _fresh(choice_game)
    assert solver.decompose(stop=lambda m: m == 3) == [4, 3]
    assert solver.members(3) == [0, 2, 3]


def test_solve_builds_through_decompose(choice_game, monkeypatch):
    solver = PriorityPromotionSolver(choice_game)
    tops = []
    decompose = solver.decompose

    def recording(top=None, stop=None):
        tops.append(top)
        return decompose(top, stop)

    monkeypatch.setattr(solver, "decompose", recording)
    solution = solver.solve_all()
    assert solution.winner.tolist() == [1, 0, 1, 1]
    assert tops[0] == 4


def _escape_game():
    # v3 (6) and v0 (4) are Even self-loops; Odd at v2 can run from region 2 to either
    return ParityGame([4, 2, 1, 6], [0, 0, 1, 0], [[0], [1], [1, 0, 3], [3]])


def test_region_escapes_to_lowest_higher_region():
    solver = _fresh(_escape_game())
    solver.decompose()
    assert solver.members(2) == [1, 2]
    assert solver.region_status(2) == RegionStatus(ESCAPES, 4)


def test_top_region_is_dominion():
    solver = _fresh(_escape_game())
    solver.decompose()
    assert solver.region_status(6).kind == DOMINION


def test_region_open_downwards():
    # Odd owns the top vertex and can move down to v1
    game = ParityGame([4, 1], [1, 1], [[0, 1], [1]])
    solver = _fresh(game)
    solver.decompose()
    assert solver.region_status(4).kind == OPEN


def test_region_status_rejects_escape_to_opponent():
    game = ParityGame([4, 2, 3], [0, 1, 0], [[0], [1, 2], [2]])
    solver = _fresh(game)
    solver.region = [4, 2, 3]
    with pytest.raises(ParityGameError):
        solver.region_status(2)


def _promotion_state(variant, edge_into_promoted):
    successors = [[0], [1], [2, 1] if edge_into_promoted else [2], [3]]
    game = ParityGame([6, 4, 3, 2], [0, 0, 0, 0], successors)
    solver = PriorityPromotionSolver(game, variant)
    solver.region = [6, 4, 3, 2]
    solver.promote(4, 6)
    return solver.region


@pytest.mark.parametrize("variant, edge, expected", [
    ("pp", False, [6, 6, BOT, BOT]),
    ("ppp", False, [6, 6, BOT, 2]),
    ("dp", False, [6, 6, BOT, 2]),
    ("rr", False, [6, 6, 3, 2]),
    ("rr", True, [6, 6, BOT, 2]),
    ("rrdp", True, [6, 6, BOT, 2]),
])
def test_promotion_resets(variant, edge, expected):
    assert _promotion_state(variant, edge) == expected


@pytest.mark.parametrize("variant", VARIANTS)
def test_matches_oracle(variant, oracle_games):
    for game, expected in oracle_games:
        normalized, renaming = normalize(game)
        solution = pp_solve(normalized, variant=variant).renamed(renaming)
        assert np.array_equal(solution.winner, expected.winner)
        assert verify(game, solution) == []


@pytest.mark.parametrize("variant", VARIANTS)
def test_variants_agree_with_zielonka(variant):
    promotions = 0
    for game in random_small_games(20, seed=300, max_n=60, max_profiles=10 ** 100):
        game, _ = normalize(game)
        solver = PriorityPromotionSolver(game, variant)
        solution = solver.solve_all()
        promotions += solver.stats["promotions"]
        assert np.array_equal(solution.winner, zielonka_solve(game).winner)
        assert verify(game, solution) == []
    assert promotions > 0


def test_unnormalized_input(choice_game):
    solution = pp_solve(choice_game)
    assert solution.winner.tolist() == [1, 0, 1, 1]
    assert verify(choice_game, solution) == []


@pytest.mark.slow
def test_steady_game_speed():
    import time

    game, _ = normalize(gen_random_game(GenSpec.for_class("steady", 20_000, 1)))
    start = time.perf_counter()
    pp_solve(game)
    assert time.perf_counter() - start < 5.0


@pytest.mark.slow
def test_variants_agree_on_many_games():
    for game in random_small_games(500, seed=900, max_n=40, max_profiles=10 ** 100):
        game, _ = normalize(game)
        winners = [pp_solve(game, variant=variant).winner for variant in VARIANTS]
        assert all(np.array_equal(w, winners[0]) for w in winners[1:])
