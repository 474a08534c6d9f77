import os
import sys
from math import prod

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from HarnessModule import GAME_CLASSES, GenSpec, brute_force_solve, gen_random_game  # noqa: E402
from ParityGameModule import ParityGame, parse_pgsolver  # noqa: E402

ALL_SOLVERS = ("zlk", "uzlk", "spm", "qpt", "pp", "ppp", "rr", "dp", "rrdp")


def game_from(text: str) -> ParityGame:
    return parse_pgsolver(text)


def random_small_games(count: int, seed: int = 0, max_n: int = 8, max_profiles: int = 1024):
    """
    Seeded games over all three classes with 2..max_n vertices, skipping
    the ones whose strategy profiles make the brute-force oracle slow.
    """
    games = []
    i = 0
    while len(games) < count:
        game_class = GAME_CLASSES[i % len(GAME_CLASSES)]
        n = 2 + (i // len(GAME_CLASSES)) % (max_n - 1)
        game = gen_random_game(GenSpec.for_class(game_class, n, seed + i))
        i += 1
        if prod(len(s) for s in game.successors) <= max_profiles:
            games.append(game)
    return games


@pytest.fixture
def even_loop():
    return game_from("parity 0;\n0 2 0 0;\n")


@pytest.fixture
def odd_loop():
    return game_from("parity 0;\n0 1 1 0;\n")


@pytest.fixture
def two_cycle():
    # v0 Even pr 2 -> v1, v1 Odd pr 1 -> v0: the cycle's top priority is 2
    return game_from("parity 1;\n0 2 0 1;\n1 1 1 0;\n")


@pytest.fixture
def choice_game():
    """
    Odd at v0 chooses between an even sink (v1) and an odd sink (v2);
    Even at v3 can only reach v0.
    """
    return game_from(
        "parity 3;\n"
        "0 0 1 1,2;\n"
        "1 4 0 1;\n"
        "2 3 1 2;\n"
        "3 2 0 0;\n"
    )


@pytest.fixture(scope="session")
def oracle_games():
    games = random_small_games(150, seed=1000)
    return [(game, brute_force_solve(game)) for game in games]
