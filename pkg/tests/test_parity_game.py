import numpy as np
import pytest

from conftest import game_from, random_small_games
from HarnessModule import GenSpec, brute_force_solve, gen_random_game
from ParityGameModule import (Attractor, EmptySubgameError, ParityGame, PGSolverParseError, Player,
                              Solution, VertexSet, attractor, compress_priorities, inflate_priorities,
                              normalize, parse_pgsolver, parse_solution, top_priority, write_pgsolver,
                              write_solution)


def test_parse_two_vertex_game():
    game = parse_pgsolver(b"parity 1;\n0 2 0 1;\n1 1 1 0;")
    assert game.n == 2
    assert game.prio_list == [2, 1]
    assert game.owner_list == [0, 1]
    assert game.successors == ((1,), (0,))
    assert game.predecessors == ((1,), (0,))


def test_parse_without_header():
    game = parse_pgsolver("0 0 0 0;")
    assert game.n == 1
    assert game.has_self_loop(0)


def test_parse_sparse_ids_and_labels():
    game = parse_pgsolver('parity 20;\n10 3 1 20 "a";\n20 0 0 10,20;\n')
    assert game.successors == ((1,), (0, 1))
    assert game.original_ids.tolist() == [10, 20]
    assert game.labels == ("a", None)


@pytest.mark.parametrize("text", [
    "0 1 0;",               # no successors
    "0 1 2 0;",             # owner out of range
    "0 1 0 1;",             # successor is not a vertex
    "0 1 0 0;\n0 2 1 0;",   # duplicate id
    "zero 1 0 0;",
])
def test_parse_errors(text):
    with pytest.raises(PGSolverParseError):
        parse_pgsolver(text)


def test_parse_error_reports_line():
    with pytest.raises(PGSolverParseError) as err:
        parse_pgsolver("parity 1;\n0 1 0 1;\n1 1 0 ;\n")
    assert err.value.line == 3


def test_undecodable_bytes_are_a_parse_error():
    with pytest.raises(PGSolverParseError) as err:
        parse_pgsolver(b"parity 1;\n0 1 0 1;\n1 1 0 0 \"\xff\";\n")
    assert err.value.line == 3


def test_write_self_loop():
    assert write_pgsolver(game_from("0 0 0 0;")) == "parity 0;\n0 0 0 0;\n"


def test_write_label():
    game = ParityGame([1], [0], [[0]], labels=['say "hi"'])
    assert write_pgsolver(game) == 'parity 0;\n0 1 0 0 "say \\"hi\\"";\n'
    assert parse_pgsolver(write_pgsolver(game)) == game


def test_solution_format_uses_source_ids():
    game = parse_pgsolver("parity 9;\n5 2 0 9;\n9 1 1 5;\n")
    solution = Solution.unsolved(2)
    solution.solve(0, 0, 1)
    solution.solve(1, 0)
    text = write_solution(solution, game.original_ids)
    assert text == "paritysol 9;\n5 0 9;\n9 0;\n"
    back = parse_solution(text, game.n, game.original_ids)
    assert back.winner.tolist() == [0, 0]
    assert back.strategy.tolist() == [1, -1]


def test_player():
    assert Player.EVEN.opponent is Player.ODD
    assert Player.of(7) is Player.ODD


def test_vertex_set_operations():
    a = VertexSet.of(5, [0, 2, 4])
    b = VertexSet.of(5, [2, 3])
    assert list(a | b) == [0, 2, 3, 4]
    assert list(a & b) == [2]
    assert list(a - b) == [0, 4]
    assert VertexSet.of(5, [2]) <= a
    assert not VertexSet.empty(5)
    assert len(VertexSet.full(5)) == 5


def test_attractor_owner_successor(two_cycle):
    region, strategy = attractor(two_cycle, two_cycle.everything(), Player.EVEN, VertexSet.of(2, [1]))
    assert list(region) == [0, 1]
    assert strategy == {0: 1}


def test_attractor_of_whole_subgame(choice_game):
    everything = choice_game.everything()
    region, _ = attractor(choice_game, everything, Player.ODD, everything)
    assert region == everything


def test_attractor_needs_all_opponent_edges(choice_game):
    # Odd at v0 can still go to v2, so Even does not attract v0 from v1
    region, _ = attractor(choice_game, choice_game.everything(), Player.EVEN, VertexSet.of(4, [1]))
    assert list(region) == [1]
    region, _ = attractor(choice_game, choice_game.everything(), Player.ODD, VertexSet.of(4, [2]))
    assert list(region) == [0, 2, 3]


def test_attractor_counts_calls(choice_game):
    attr = Attractor(choice_game)
    mask = np.ones(4, dtype=bool)
    first = attr.run(mask, 1, VertexSet.of(4, [2]).mask)
    second = attr.run(mask, 1, VertexSet.of(4, [2]).mask)
    assert attr.calls == 2
    assert np.array_equal(first, second)


def test_normalize_removes_gaps():
    game = ParityGame([6, 1, 4], [0, 1, 0], [[1], [2], [0]])
    normalized, renaming = normalize(game)
    assert normalized.prio_list == [1, 2, 4]
    assert renaming.tolist() == [1, 2, 0]
    assert normalized.is_sorted


def test_normalize_keeps_gap_free_priorities():
    game = ParityGame([0, 1, 2], [0, 1, 0], [[1], [2], [0]])
    assert normalize(game)[0].prio_list == [0, 1, 2]


def test_compress_merges_blocks():
    game = ParityGame([2, 5, 7, 8], [0, 0, 0, 0], [[1], [2], [3], [0]])
    assert compress_priorities(game).prio_list == [0, 1, 1, 2]


def test_compress_single_parity():
    game = ParityGame([2, 4, 8], [0, 1, 0], [[1], [2], [0]])
    assert compress_priorities(game).prio_list == [0, 0, 0]


def test_inflate_gives_unique_priorities():
    game = ParityGame([0, 0, 1], [0, 1, 0], [[1], [2], [0]])
    assert inflate_priorities(game).prio_list == [0, 2, 3]


def test_top_priority():
    game = ParityGame([3, 0, 7], [0, 1, 0], [[1], [2], [0]])
    assert top_priority(game, VertexSet.of(3, [1])) == 0
    assert top_priority(game, game.everything()) == 7
    with pytest.raises(EmptySubgameError):
        top_priority(game, game.nothing())


def test_top_priority_matches_scan():
    rng = np.random.default_rng(3)
    for game in random_small_games(20, seed=3):
        normalized, _ = normalize(game)
        for _ in range(5):
            mask = rng.random(game.n) < 0.5
            if not mask.any():
                continue
            assert top_priority(normalized, VertexSet(mask)) == normalized.priority[mask].max()


class CountingMask:
    def __init__(self, mask):
        self.mask = mask
        self.reads = 0

    def __getitem__(self, v):
        self.reads += 1
        return self.mask[v]

    def any(self):
        return self.mask.any()


def test_top_priority_reads_from_the_top():
    n = 1000
    game = ParityGame(list(range(n)), [0] * n, [[(v + 1) % n] for v in range(n)])
    full = CountingMask(np.ones(n, dtype=bool))
    assert top_priority(game, VertexSet(full)) == n - 1
    assert full.reads == 1
    lower = np.ones(n, dtype=bool)
    lower[-3:] = False
    counted = CountingMask(lower)
    assert top_priority(game, VertexSet(counted)) == n - 4
    assert counted.reads == 4


def test_renaming_maps_solution_back():
    game = ParityGame([6, 1, 4], [0, 1, 0], [[1], [2], [0]])
    normalized, renaming = normalize(game)
    solution = Solution.unsolved(3)
    for v in range(3):
        solution.solve(v, 0, (v + 1) % 3)
    back = solution.renamed(renaming)
    # normalized vertex i is game vertex renaming[i]
    assert back.strategy[renaming[0]] == renaming[1]


@pytest.mark.parametrize("transform", [
    lambda g: normalize(g)[0].permute(np.argsort(normalize(g)[1])),
    compress_priorities,
    inflate_priorities,
])
def test_renumbering_preserves_winners(transform):
    for game in random_small_games(40, seed=11):
        assert np.array_equal(brute_force_solve(game).winner, brute_force_solve(transform(game)).winner)


def _naive_attractor(game, player, target):
    result = target.copy()
    while True:
        grown = result.copy()
        for v in range(game.n):
            succ_in = [result[w] for w in game.successors[v]]
            if game.owner_list[v] == player and any(succ_in):
                grown[v] = True
            elif game.owner_list[v] != player and all(succ_in):
                grown[v] = True
        if np.array_equal(grown, result):
            return result
        result = grown


def test_attractor_matches_naive_fixpoint():
    rng = np.random.default_rng(8)
    for game in random_small_games(60, seed=8, max_profiles=10 ** 9):
        everything = np.ones(game.n, dtype=bool)
        attr = Attractor(game)
        for player in (0, 1):
            target = rng.random(game.n) < 0.3
            result = attr.run(everything, player, target)
            assert np.array_equal(result, _naive_attractor(game, player, target))

            # monotone in the target and idempotent
            wider = target | (rng.random(game.n) < 0.3)
            assert not (result & ~attr.run(everything, player, wider)).any()
            assert np.array_equal(attr.run(everything, player, result), result)

            # every vertex left outside can stay outside
            for v in np.flatnonzero(~result).tolist():
                outside = [not result[w] for w in game.successors[v]]
                assert all(outside) if game.owner_list[v] == player else any(outside)


def test_write_then_parse_is_identity():
    for seed in range(100):
        game_class = ("lowdeg", "fullrandom", "steady")[seed % 3]
        game = gen_random_game(GenSpec.for_class(game_class, 5 + seed % 40, seed))
        assert parse_pgsolver(write_pgsolver(game)) == game
