import logging
import os
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from dotenv import load_dotenv

from ParityGameModule import Attractor, ParityGame, Solution, Solver, VertexSet

ENV_FILE = os.path.join(os.path.dirname(__file__), '.env')
load_dotenv(dotenv_path=ENV_FILE)
DEFAULT_WORKERS = int(os.getenv("PG_WORKERS", 1))

logger = logging.getLogger(__name__)

BOT = -1
DISABLED = -2

# Phases of a frame on the work stack.
ENTER, AFTER_FIRST, AFTER_SECOND = range(3)


def zielonka_attr(game: ParityGame, subgame: VertexSet, player: int) -> VertexSet:
    """
    Attract to the top-priority vertices for `player` and keep going with
    the next top priority of what is left as long as it has player's parity.
    """
    attractor = Attractor(game)
    result = np.zeros(game.n, dtype=bool)
    rest = subgame.mask.copy()
    while rest.any():
        top = int(game.priority[rest].max())
        if top & 1 != player:
            break
        layer = attractor.run(rest, player, rest & (game.priority == top))
        result |= layer
        rest &= ~layer
    return VertexSet(result)


# -----------------------------------------------------------------------
#  PARALLEL ATTRACTOR
# -----------------------------------------------------------------------

class ParallelAttractor:
    """
    Attractor over a shared region array, expanded level by level as tasks
    on a thread pool; idle workers pick up the next pending chunk. A vertex
    is claimed by moving its region value from "in subgame" to r, and escape
    counters are decremented, both under striped locks.

    Claims are not lock-free: a claim is a test-and-set under the lock of
    the vertex's stripe, so two vertices in one stripe serialise. Workers
    do not steal from each other inside a level either; a level ends only
    when every chunk of it is done, and the next frontier starts from there.
    The result equals the sequential attractor whatever the interleaving.
    """
    STRIPES = 64
    CHUNK = 64

    def __init__(self, game: ParityGame, workers: int):
        self.game = game
        self.workers = workers
        self.pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="attr")
        self._locks = [threading.Lock() for _ in range(self.STRIPES)]
        self._count = [0] * game.n
        self._stamp = [-1] * game.n

    def close(self) -> None:
        self.pool.shutdown(wait=True)

    def _claim(self, region: List[int], v: int, r: int, r_start: int) -> bool:
        with self._locks[v % self.STRIPES]:
            rv = region[v]
            if rv == r or not (rv == BOT or rv >= r_start):
                return False
            region[v] = r
            return True

    def _escape(self, region: List[int], u: int, r: int, r_start: int) -> bool:
        """Decrement u's escape counter; True when it just reached zero."""
        with self._locks[u % self.STRIPES]:
            if self._stamp[u] != r:
                self._stamp[u] = r
                self._count[u] = sum(1 for x in self.game.successors[u]
                                     if region[x] == BOT or region[x] >= r_start)
            self._count[u] -= 1
            return self._count[u] == 0

    def _expand(self, chunk: List[int], region: List[int], r: int, player: int,
                r_start: int, strategy: List[int]) -> List[int]:
        owner, pred = self.game.owner_list, self.game.predecessors
        claimed = []
        for w in chunk:
            for u in pred[w]:
                ru = region[u]
                if ru == r or not (ru == BOT or ru >= r_start):
                    continue
                if owner[u] == player:
                    if self._claim(region, u, r, r_start):
                        strategy[u] = w
                        claimed.append(u)
                elif self._escape(region, u, r, r_start) and self._claim(region, u, r, r_start):
                    claimed.append(u)
        return claimed

    def attract(self, region: List[int], r: int, player: int, seeds: List[int],
                r_start: int, strategy: List[int]) -> List[int]:
        for s in seeds:
            region[s] = r
        result = list(seeds)
        frontier = list(seeds)
        while frontier:
            chunks = [frontier[i:i + self.CHUNK] for i in range(0, len(frontier), self.CHUNK)]
            futures = [self.pool.submit(self._expand, c, region, r, player, r_start, strategy) for c in chunks]
            frontier = [v for f in futures for v in f.result()]
            result.extend(frontier)
        return result


def parallel_attractor(game: ParityGame, subgame: VertexSet, player: int,
                       target: VertexSet, workers: int) -> VertexSet:
    region = [BOT if inside else DISABLED for inside in subgame.mask.tolist()]
    strategy = [-1] * game.n
    seeds = [v for v in target if v in subgame]
    if workers <= 1:
        solver = ZielonkaSolver(game)
        solver.region = region
        attracted = solver._attract(0, player, seeds, 0)
    else:
        attr = ParallelAttractor(game, workers)
        try:
            attracted = attr.attract(region, 0, player, seeds, 0, strategy)
        finally:
            attr.close()
    return VertexSet.of(game.n, attracted)


# -----------------------------------------------------------------------
#  SOLVER
# -----------------------------------------------------------------------

@dataclass
class Frame:
    members: List[int]
    phase: int = ENTER
    player: int = 0
    r_start: int = 0
    r_child: int = 0
    attracted: List[int] = field(default_factory=list)


class ZielonkaSolver(Solver):
    """
    Zielonka's recursive algorithm run as a flat loop over a stack of
    frames. Subgames are never copied: `region[v]` holds the number of the
    attractor call that took v (BOT while unassigned), so the subgame of a
    frame is every vertex that is BOT or was taken by a call numbered at
    least the frame's `r_start`. Frame members stay in priority order, so
    the top of a subgame is found by scanning from the end.

    optimized=True is `zlk` (extended attractor, skip the second recursion
    when the opponent attracts nothing); optimized=False is `uzlk`.
    """
    name = "zlk"

    def __init__(self, game: ParityGame, optimized: bool = True, workers: int = 1):
        super().__init__(game)
        self.optimized = optimized
        self.workers = workers
        n = game.n
        self.order = np.argsort(game.priority, kind="stable").tolist()
        self.region: List[int] = [DISABLED] * n
        self.winner: List[int] = [-1] * n
        self.strategy: List[int] = [-1] * n
        self._count = [0] * n
        self._stamp = [-1] * n
        self._next = 0
        self._parallel: Optional[ParallelAttractor] = None

    def _fresh(self) -> int:
        r = self._next
        self._next += 1
        return r

    def _attract(self, r: int, player: int, seeds: List[int], r_start: int,
                 reset_seeds: bool = True) -> List[int]:
        """
        Attract inside {v : region[v] is BOT or >= r_start} to `seeds` and
        mark every vertex taken with r. Returns seeds plus attracted.
        """
        self.stats["attractor calls"] += 1
        strategy = self.strategy
        if reset_seeds:
            for s in seeds:
                strategy[s] = -1
        if self._parallel is not None:
            return self._parallel.attract(self.region, r, player, seeds, r_start, strategy)

        region, count, stamp = self.region, self._count, self._stamp
        owner, succ, pred = self.game.owner_list, self.game.successors, self.game.predecessors
        for s in seeds:
            region[s] = r
        result = list(seeds)
        queue = deque(seeds)
        while queue:
            w = queue.popleft()
            for u in pred[w]:
                ru = region[u]
                if ru == r or not (ru == BOT or ru >= r_start):
                    continue
                if owner[u] == player:
                    region[u] = r
                    strategy[u] = w
                    result.append(u)
                    queue.append(u)
                    continue
                if stamp[u] != r:
                    stamp[u] = r
                    count[u] = sum(1 for x in succ[u] if region[x] == BOT or region[x] >= r_start)
                count[u] -= 1
                if count[u] == 0:
                    region[u] = r
                    result.append(u)
                    queue.append(u)
        return result

    def _top_attractor(self, frame: Frame) -> List[int]:
        region, prio, members = self.region, self.game.prio_list, frame.members
        attracted: List[int] = []
        i = len(members) - 1
        while True:
            while i >= 0 and region[members[i]] != BOT:
                i -= 1
            if i < 0:
                break
            top = prio[members[i]]
            if top & 1 != frame.player or (attracted and not self.optimized):
                break
            seeds = []
            j = i
            while j >= 0 and prio[members[j]] == top:
                if region[members[j]] == BOT:
                    seeds.append(members[j])
                j -= 1
            r = self._fresh()
            attracted.extend(self._attract(r, frame.player, seeds, r))
        return attracted

    def _player_wins_attracted(self, frame: Frame) -> None:
        """α keeps A; top vertices of α play to any vertex in W_α ∪ A."""
        alpha, opp = frame.player, 1 - frame.player
        region, winner, strategy = self.region, self.winner, self.strategy
        owner, succ = self.game.owner_list, self.game.successors
        for v in frame.attracted:
            winner[v] = alpha
        for v in frame.attracted:
            if owner[v] == alpha and strategy[v] == -1:
                strategy[v] = next(
                    w for w in succ[v]
                    if region[w] >= frame.r_start
                    and not (region[w] >= frame.r_child and winner[w] == opp)
                )

    def solve(self, subgame: VertexSet) -> Solution:
        game = self.game
        region, winner = self.region, self.winner
        mask = subgame.mask.tolist()
        for v in range(game.n):
            region[v] = BOT if mask[v] else DISABLED
        if self.workers > 1:
            self._parallel = ParallelAttractor(game, self.workers)

        try:
            stack = [Frame([v for v in self.order if mask[v]])]
            while stack:
                frame = stack[-1]
                self.stats["max depth"] = max(self.stats["max depth"], len(stack))

                if frame.phase == ENTER:
                    if not frame.members:
                        stack.pop()
                        continue
                    self.stats["frames"] += 1
                    frame.r_start = self._next
                    frame.player = game.prio_list[frame.members[-1]] & 1
                    frame.attracted = self._top_attractor(frame)
                    frame.r_child = self._next
                    frame.phase = AFTER_FIRST
                    stack.append(Frame([v for v in frame.members if region[v] == BOT]))

                elif frame.phase == AFTER_FIRST:
                    opp = 1 - frame.player
                    lost = [v for v in frame.members
                            if region[v] >= frame.r_child and winner[v] == opp]
                    if not lost:
                        self._player_wins_attracted(frame)
                        stack.pop()
                        continue
                    r = self._fresh()
                    extended = self._attract(r, opp, lost, frame.r_start, reset_seeds=False)
                    if self.optimized and len(extended) == len(lost):
                        self.stats["skipped recursions"] += 1
                        self._player_wins_attracted(frame)
                        stack.pop()
                        continue
                    for v in extended[len(lost):]:
                        winner[v] = opp
                    rest = []
                    for v in frame.members:
                        if region[v] != r:
                            region[v] = BOT
                            rest.append(v)
                    frame.phase = AFTER_SECOND
                    stack.append(Frame(rest))

                else:
                    stack.pop()
        finally:
            if self._parallel is not None:
                self._parallel.close()
                self._parallel = None

        solution = Solution.unsolved(game.n)
        owner = game.owner_list
        for v in np.flatnonzero(subgame.mask).tolist():
            w = winner[v]
            solution.solve(v, w, self.strategy[v] if owner[v] == w else -1)
        logger.debug("%s: %s", self.name, dict(self.stats))
        return solution


class UnoptimizedZielonkaSolver(ZielonkaSolver):
    name = "uzlk"

    def __init__(self, game: ParityGame, workers: int = 1):
        super().__init__(game, optimized=False, workers=workers)


def zielonka_solve(game: ParityGame, subgame: Optional[VertexSet] = None,
                   optimized: bool = True, workers: int = DEFAULT_WORKERS) -> Solution:
    solver = ZielonkaSolver(game, optimized=optimized, workers=workers)
    return solver.solve(subgame if subgame is not None else game.everything())
