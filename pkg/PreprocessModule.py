import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ParityGameModule import Attractor, ParityGame, Solution, Solver, VertexSet

logger = logging.getLogger(__name__)


@dataclass
class PreprocessResult:
    """
    `solved` decides exactly the vertices removed so far, `remaining` is the
    rest. `game` is the game the remainder must be solved on: self-loop
    removal may drop losing loops, which only ever shrinks the edge set.
    """
    game: ParityGame
    solved: Solution
    remaining: VertexSet
    statistics: Counter = field(default_factory=Counter)

    @classmethod
    def start(cls, game: ParityGame, remaining: Optional[VertexSet] = None) -> "PreprocessResult":
        remaining = remaining.copy() if remaining is not None else game.everything()
        return cls(game, Solution.unsolved(game.n), remaining)


def _claim(result: PreprocessResult, player: int, seeds: List[int], seed_strategy: dict, technique: str) -> int:
    """
    Give `player` the seeds and their attractor inside the remainder, and
    take them out of it. Returns the number of vertices decided.
    """
    game = result.game
    remaining = result.remaining.mask
    target = np.zeros(game.n, dtype=bool)
    target[seeds] = True
    strategy = np.full(game.n, -1, dtype=np.int64)
    won = Attractor(game).run(remaining, player, target, strategy)
    for v, s in seed_strategy.items():
        strategy[v] = s
    for v in np.flatnonzero(won).tolist():
        s = int(strategy[v]) if game.owner_list[v] == player else -1
        result.solved.solve(v, player, s)
    remaining &= ~won
    decided = int(np.count_nonzero(won))
    result.statistics[technique] += decided
    return decided


# -----------------------------------------------------------------------
#  SELF-LOOPS
# -----------------------------------------------------------------------

def solve_self_loops(game: ParityGame, remaining: VertexSet) -> PreprocessResult:
    result = PreprocessResult.start(game, remaining)
    _solve_self_loops(result)
    return result


def _solve_self_loops(result: PreprocessResult) -> int:
    decided = 0
    game = result.game
    changed = True
    while changed:
        changed = False
        for v in range(game.n):
            if not result.remaining.mask[v] or not game.has_self_loop(v):
                continue
            owner, prio = game.owner_list[v], game.prio_list[v]
            if prio & 1 == owner:
                decided += _claim(result, owner, [v], {v: v}, "self-loops")
                changed = True
            elif all(w == v for w in game.successors[v] if result.remaining.mask[w]):
                decided += _claim(result, 1 - owner, [v], {}, "self-loops")
                changed = True

    # Every loop left now loses for its owner and has another way out
    # inside the remainder, so dropping it keeps the remainder total.
    useless = [v for v in np.flatnonzero(result.remaining.mask).tolist() if game.has_self_loop(v)]
    if useless:
        result.game = game.without_self_loops(useless)
        result.statistics["self-loops removed"] += len(useless)
    return decided + len(useless)


# -----------------------------------------------------------------------
#  WINNER-CONTROLLED WINNING CYCLES
# -----------------------------------------------------------------------

def solve_winner_controlled_cycles(game: ParityGame, remaining: VertexSet) -> PreprocessResult:
    result = PreprocessResult.start(game, remaining)
    while _solve_winner_controlled_cycles(result):
        pass
    return result


def _solve_winner_controlled_cycles(result: PreprocessResult) -> int:
    decided = 0
    game = result.game
    for player in (0, 1):
        rem = result.remaining.mask
        own = rem & (game.owner == player) & ((game.priority & 1) == player)
        if not own.any():
            continue
        seeds, strategy = [], {}
        for component in strongly_connected_components(game, own):
            if len(component) == 1:
                v = component[0]
                if game.has_self_loop(v):
                    seeds.append(v)
                    strategy[v] = v
                continue
            members = set(component)
            for v in component:
                seeds.append(v)
                strategy[v] = next(w for w in game.successors[v] if w in members)
        if seeds:
            decided += _claim(result, player, seeds, strategy, "wcwc")
    return decided


# -----------------------------------------------------------------------
#  SINGLE PARITY
# -----------------------------------------------------------------------

def solve_single_parity(game: ParityGame, remaining: VertexSet) -> PreprocessResult:
    result = PreprocessResult.start(game, remaining)
    _solve_single_parity(result)
    return result


def _solve_single_parity(result: PreprocessResult) -> int:
    game = result.game
    rem = result.remaining.mask
    members = np.flatnonzero(rem).tolist()
    if not members:
        return 0
    parities = set((game.priority[rem] & 1).tolist())
    if len(parities) != 1:
        return 0
    winner = parities.pop()
    for v in members:
        s = -1
        if game.owner_list[v] == winner:
            s = next(w for w in game.successors[v] if rem[w])
        result.solved.solve(v, winner, s)
    rem[:] = False
    result.statistics["single parity"] += len(members)
    return len(members)


def preprocess(game: ParityGame, loops: bool = True, wcwc: bool = True,
               single: bool = True) -> PreprocessResult:
    """
    Run the enabled reductions in the order self-loops, winner-controlled
    cycles, single parity, and start over while any of them made progress.
    """
    result = PreprocessResult.start(game)
    while result.remaining:
        progress = 0
        if loops:
            progress += _solve_self_loops(result)
        if wcwc:
            progress += _solve_winner_controlled_cycles(result)
        if single:
            progress += _solve_single_parity(result)
        if not progress:
            break
    if result.statistics:
        logger.info("preprocessing: %s", dict(result.statistics))
    return result


# -----------------------------------------------------------------------
#  SCC DECOMPOSITION
# -----------------------------------------------------------------------

def strongly_connected_components(game: ParityGame, subgame: np.ndarray,
                                  successors: Optional[Sequence[Sequence[int]]] = None) -> List[List[int]]:
    """
    Tarjan's algorithm on the subgraph induced by `subgame`, without
    recursion. Components come out in reverse topological order, so the
    first one is always a bottom component. `successors` replaces the
    game's edges when given.
    """
    n = game.n
    inside = subgame.tolist()
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: List[int] = []
    components: List[List[int]] = []
    counter = 0
    succ = successors if successors is not None else game.successors

    for root in np.flatnonzero(subgame).tolist():
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            edges = succ[v]
            while i < len(edges):
                w = edges[i]
                i += 1
                if not inside[w]:
                    continue
                if index[w] == -1:
                    work[-1] = (v, i)
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    if low[v] < low[parent]:
                        low[parent] = low[v]
                if low[v] == index[v]:
                    component = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        component.append(w)
                        if w == v:
                            break
                    components.append(component)
    return components


def bottom_scc(game: ParityGame, subgame: np.ndarray) -> List[int]:
    return strongly_connected_components(game, subgame)[0]


def scc_solve(game: ParityGame, solver: Solver, subgame: Optional[VertexSet] = None) -> Solution:
    """
    Solve a bottom SCC of what is left, extend both winning regions by
    their attractors into the rest, and repeat until nothing is left.
    """
    remaining = (subgame if subgame is not None else game.everything()).mask.copy()
    solution = Solution.unsolved(game.n)
    attractor = Attractor(game)
    rounds = 0
    while remaining.any():
        rounds += 1
        component = bottom_scc(game, remaining)
        part = solver.solve(VertexSet.of(game.n, component))
        solution.merge(part)
        for player in (0, 1):
            won = part.winner == player
            strategy = np.full(game.n, -1, dtype=np.int64)
            region = attractor.run(remaining, player, won, strategy)
            for v in np.flatnonzero(region & ~won).tolist():
                solution.solve(v, player, int(strategy[v]) if game.owner_list[v] == player else -1)
            remaining &= ~region
    logger.debug("scc decomposition solved %d bottom components", rounds)
    return solution
