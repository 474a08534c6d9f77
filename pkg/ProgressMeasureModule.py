import logging
import os
from collections import deque
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv

from ParityGameModule import Attractor, ParityGame, ParityGameError, Solution, Solver, VertexSet

ENV_FILE = os.path.join(os.path.dirname(__file__), '.env')
load_dotenv(dotenv_path=ENV_FILE)
# 0 means "every |V| successful lifts"
CHECK_INTERVAL = int(os.getenv("PG_SPM_CHECK_INTERVAL", 0))

logger = logging.getLogger(__name__)

# A measure is a tuple of counters, one per even priority (index i counts
# priority 2i), or TOP.
TOP = None
Measure = Optional[Tuple[int, ...]]


def measure_key(m: Measure):
    """Sort key realising the total order on measures, TOP last."""
    return (1, ()) if m is TOP else (0, m[::-1])


def compare(m1: Measure, m2: Measure, p: int = 0) -> int:
    """
    -1, 0 or 1 as m1 is below, equal to or above m2 when only the
    counters of priorities >= p are looked at.
    """
    if m1 is TOP or m2 is TOP:
        return (m1 is TOP) - (m2 is TOP)
    lo = (p + 1) // 2
    a, b = m1[lo:][::-1], m2[lo:][::-1]
    return (a > b) - (a < b)


def prog(m: Measure, p: int, caps: Sequence[int]) -> Measure:
    """
    Least measure that is >=_p m (strictly above for even p). Counters
    below p are zeroed; a counter that would pass its cap wraps to zero and
    carries into the next even priority, and carrying past the top gives TOP.
    """
    if m is TOP:
        return TOP
    lo = (p + 1) // 2
    out = [0] * lo + list(m[lo:])
    if p & 1:
        return tuple(out)
    i = p // 2
    while i < len(out):
        if out[i] < caps[i]:
            out[i] += 1
            return tuple(out)
        out[i] = 0
        i += 1
    return TOP


def play_measure(priorities: Sequence[int]) -> Tuple[int, ...]:
    """
    Measure of a finite play: for each even p, how often p occurs before
    the first priority above p.
    """
    top = max(priorities)
    out = []
    for p in range(0, top + 1, 2):
        count = 0
        for q in priorities:
            if q > p:
                break
            count += q == p
        out.append(count)
    return tuple(out)


class LiftingTable:
    """
    Values of one player over a subgame, raised monotonically from a work
    queue. Everything is kept in that player's frame: priorities are shifted
    by the player so its own priorities are even, and vertices it owns are
    the maximisers. TOP means the player wins.

    Subclasses give the start value, `value(v, w)` (what v gets from moving
    to w) and `key`, a sort key for the total order on values.
    """
    key = staticmethod(measure_key)

    def __init__(self, game: ParityGame, members: List[int], player: int, start):
        self.game = game
        self.player = player
        n = game.n
        self.prio = [p + player for p in game.prio_list]
        self.maximiser = [o == player for o in game.owner_list]
        self.inside = [False] * n
        for v in members:
            self.inside[v] = True
        self.rho: list = [start] * n
        self.queue = deque(sorted(members, key=lambda v: self.prio[v]))
        self.queued = [False] * n
        for v in members:
            self.queued[v] = True

    def value(self, v: int, w: int):
        raise NotImplementedError

    def best(self, v: int):
        """Max over successor values for a maximiser, min for the other player."""
        values = (self.value(v, w) for w in self.game.successors[v] if self.inside[w])
        pick = max if self.maximiser[v] else min
        return pick(values, key=self.key)

    def argmin(self, v: int, within: Optional[Sequence[bool]] = None) -> int:
        """First successor, in edge order, of least value; only `within` when given."""
        allowed = within if within is not None else self.inside
        return min((w for w in self.game.successors[v] if allowed[w]),
                   key=lambda w: self.key(self.value(v, w)))

    def lift(self, v: int) -> bool:
        """Raise rho[v] to the best successor value; True when it changed."""
        if self.rho[v] is TOP:
            return False
        best = self.best(v)
        if self.key(best) <= self.key(self.rho[v]):
            return False
        self._assign(v, best)
        return True

    def set_top(self, v: int) -> None:
        if self.rho[v] is not TOP:
            self._assign(v, TOP)

    def _assign(self, v: int, m) -> None:
        self.rho[v] = m
        for u in self.game.predecessors[v]:
            if self.inside[u] and not self.queued[u] and self.rho[u] is not TOP:
                self.queued[u] = True
                self.queue.append(u)

    def step(self) -> bool:
        v = self.queue.popleft()
        self.queued[v] = False
        return self.lift(v)

    def restrict(self, region: np.ndarray) -> None:
        """Drop everything outside `region` and queue every vertex left."""
        self.inside = region.tolist()
        members = np.flatnonzero(region).tolist()
        self.queue = deque(members)
        self.queued = list(self.inside)

    def stuck_region(self, attractor: Attractor) -> np.ndarray:
        """
        Vertices that can never reach TOP: outside the player's attractor
        to TOP and still-queued vertices, after also marking every
        minimiser whose value sits below what staying in the region would
        give it. The result is won by the opponent, and the table restricted
        to it is already a fixpoint.
        """
        n = self.game.n
        inside = np.asarray(self.inside, dtype=bool)
        marked = np.array([self.inside[v] and (self.queued[v] or self.rho[v] is TOP)
                           for v in range(n)], dtype=bool)
        while True:
            region = inside & ~attractor.run(inside, self.player, marked)
            keep = region.tolist()
            bad = []
            for u in np.flatnonzero(region).tolist():
                if self.maximiser[u]:
                    continue
                stay = min((self.value(u, w) for w in self.game.successors[u] if keep[w]),
                           key=self.key)
                if self.key(self.rho[u]) < self.key(stay):
                    bad.append(u)
            if not bad:
                return region
            marked[bad] = True


class MeasureTable(LiftingTable):
    """Small progress measures of one player, with one cap per own priority."""

    def __init__(self, game: ParityGame, members: List[int], player: int,
                 lower_caps: bool = True, shuffle_seed: Optional[int] = None):
        prio = [p + player for p in game.prio_list]
        width = max(prio[v] for v in members) // 2 + 1
        super().__init__(game, members, player, (0,) * width)
        self.lower_caps = lower_caps
        self.caps = [0] * width
        for v in members:
            if not self.prio[v] & 1:
                self.caps[self.prio[v] // 2] += 1
        if shuffle_seed is not None:
            self.queue = deque(np.random.default_rng(shuffle_seed).permutation(members).tolist())
        self.lowered = 0

    def value(self, v: int, w: int) -> Measure:
        return prog(self.rho[w], self.prio[v], self.caps)

    def argmin(self, v: int, within: Optional[Sequence[bool]] = None) -> int:
        """
        First successor, in edge order, whose measure is least above pr(v).
        With fixed caps this is the successor of least prog; it stays a
        valid choice after caps were lowered, where progs may have moved.
        """
        lo = (self.prio[v] + 1) // 2
        allowed = within if within is not None else self.inside

        def key(w: int):
            m = self.rho[w]
            return (1, ()) if m is TOP else (0, m[lo:][::-1])

        return min((w for w in self.game.successors[v] if allowed[w]), key=key)

    def _assign(self, v: int, m: Measure) -> None:
        p = self.prio[v]
        if m is TOP and self.lower_caps and not p & 1 and self.caps[p // 2] > 0:
            self.caps[p // 2] -= 1
            self.lowered += 1
        super()._assign(v, m)


class ProgressMeasureSolver(Solver):
    """
    Lifts one table per player side by side. Every CHECK_INTERVAL lifts
    the stuck region of each table is set to TOP in the other one, and
    lifting stops as soon as every vertex is TOP in one of the two tables.
    The winner's strategy then comes from the loser's table restricted to
    the winner's region: once the stuck region of that table and its
    attractor cover the region, stuck vertices play the least successor
    in it and the rest follow the attractor.
    """
    name = "pm"
    cross_check = True

    def __init__(self, game: ParityGame):
        super().__init__(game)
        self.tables: List[LiftingTable] = []
        self.interval = 0

    def make_tables(self, members: List[int]) -> List[LiftingTable]:
        raise NotImplementedError

    def solve(self, subgame: VertexSet) -> Solution:
        game = self.game
        solution = Solution.unsolved(game.n)
        members = np.flatnonzero(subgame.mask).tolist()
        if not members:
            return solution

        self.tables = self.make_tables(members)
        self.interval = CHECK_INTERVAL or len(members)
        attractor = Attractor(game)
        if len(self.tables) == 1:
            self._solve_one_sided(members, solution)
        else:
            self._lift_until_covered(members, attractor)
            even, odd = self.tables
            won = np.zeros(game.n, dtype=bool)
            for v in members:
                if (even.rho[v] is TOP) == (odd.rho[v] is TOP):
                    raise ParityGameError(f"{self.name}: tables disagree on vertex {v}")
                won[v] = even.rho[v] is TOP
            regions = (won, subgame.mask & ~won)
            for player in (0, 1):
                strategy = self._settle(player, regions[player], attractor)
                for v in np.flatnonzero(regions[player]).tolist():
                    solution.solve(v, player, strategy.get(v, -1))
        self.stats["attractor calls"] += attractor.calls
        self._collect_stats()
        logger.debug("%s: %s", self.name, dict(self.stats))
        return solution

    def _collect_stats(self) -> None:
        pass

    def _steps(self, table: LiftingTable, budget: int) -> None:
        while table.queue and budget > 0:
            budget -= 1
            if table.step():
                self.stats["lifts"] += 1

    def _lift_until_covered(self, members: List[int], attractor: Attractor) -> None:
        even, odd = self.tables
        since_check = 0
        while even.queue or odd.queue:
            for table in self.tables:
                if table.queue and table.step():
                    self.stats["lifts"] += 1
                    since_check += 1
            if since_check < self.interval:
                continue
            since_check = 0
            if self.cross_check:
                self._cross_check(attractor)
            if all(even.rho[v] is TOP or odd.rho[v] is TOP for v in members):
                self.stats["early stops"] += 1
                break

    def _cross_check(self, attractor: Attractor) -> None:
        self.stats["checks"] += 1
        for table, other in ((self.tables[0], self.tables[1]), (self.tables[1], self.tables[0])):
            for v in np.flatnonzero(table.stuck_region(attractor)).tolist():
                if other.rho[v] is not TOP:
                    other.set_top(v)
                    self.stats["attractor tops"] += 1

    def _settle(self, player: int, region: np.ndarray, attractor: Attractor) -> Dict[int, int]:
        """Strategy of `player` on its winning region, from the other table."""
        if not region.any():
            return {}
        table = self.tables[1 - player]
        table.restrict(region)
        while True:
            stuck = table.stuck_region(attractor)
            strategy = np.full(self.game.n, -1, dtype=np.int64)
            reach = attractor.run(region, player, stuck, strategy)
            if np.array_equal(reach, region):
                break
            if not table.queue:
                raise ParityGameError(f"{self.name}: no strategy for player {player} on its region")
            self.stats["settle rounds"] += 1
            self._steps(table, self.interval)
        keep = stuck.tolist()
        owner = self.game.owner_list
        return {v: table.argmin(v, keep) if keep[v] else int(strategy[v])
                for v in np.flatnonzero(region).tolist() if owner[v] == player}

    def _solve_one_sided(self, members: List[int], solution: Solution) -> None:
        even = self.tables[0]
        while even.queue:
            if even.step():
                self.stats["lifts"] += 1
        for v in members:
            if even.rho[v] is TOP:
                solution.solve(v, 0, -1)
            else:
                solution.solve(v, 1, even.argmin(v) if self.game.owner_list[v] == 1 else -1)


class SmallProgressMeasuresSolver(ProgressMeasureSolver):
    """
    Small progress measures.

    lower_caps   lower the cap of an even priority whenever one of its
                 vertices is lifted to TOP
    dual         keep measures for both players so both strategies come out;
                 with a single table Even's strategy is left open
    attractor_check
                 find what a table can no longer lift to TOP and set it to
                 TOP in the other table
    """
    name = "spm"

    def __init__(self, game: ParityGame, lower_caps: bool = True, dual: bool = True,
                 attractor_check: bool = True, shuffle_seed: Optional[int] = None):
        super().__init__(game)
        self.lower_caps = lower_caps
        self.dual = dual
        self.cross_check = attractor_check and dual
        self.shuffle_seed = shuffle_seed

    def make_tables(self, members: List[int]) -> List[LiftingTable]:
        players = (0, 1) if self.dual else (0,)
        return [MeasureTable(self.game, members, player, self.lower_caps, self.shuffle_seed)
                for player in players]

    def _collect_stats(self) -> None:
        self.stats["cap lowerings"] += sum(t.lowered for t in self.tables)


def spm_solve(game: ParityGame, subgame: Optional[VertexSet] = None, **options) -> Solution:
    solver = SmallProgressMeasuresSolver(game, **options)
    return solver.solve(subgame if subgame is not None else game.everything())


# -----------------------------------------------------------------------
#  QUASI-POLYNOMIAL PROGRESS MEASURES
# -----------------------------------------------------------------------

# A play summary is a k-tuple: entry i stands for a stretch of 2^i
# dominating vertices and holds the priority of its first dominating
# vertex, or None. Read from the longest stretch down, the entries spell
# one binary word per even priority: the priority itself is a 1, the odd
# priority just above it a 0. Words are ordered 0 < end of word < 1 and
# the word of a higher priority counts first, so entry by entry a higher
# odd is worse, None sits in the middle and a higher even is better.
# TOP when a word can grow no further, that is when the player has seen
# more dominating even vertices than the game has.
Summary = Optional[Tuple[Optional[int], ...]]


def qpt_width(n_even: int) -> int:
    """Least k with fewer than 2^k even vertices."""
    return int(n_even).bit_length()


def stretches(summary: Summary) -> List[int]:
    """Lengths of the stretches a summary records, shortest first."""
    return [1 << i for i, b in enumerate(summary) if b is not None]


def _entry_key(b: Optional[int]):
    if b is None:
        return (1, 0)
    if b & 1:
        return (0, -b)
    return (2, b)


def qpt_key(summary: Summary):
    """Sort key for summaries: TOP last, then entries from the longest stretch down."""
    if summary is TOP:
        return (1, ())
    return (0, tuple(_entry_key(b) for b in reversed(summary)))


def qpt_compare(s1: Summary, s2: Summary) -> int:
    a, b = qpt_key(s1), qpt_key(s2)
    return (a > b) - (a < b)


def _summary(word: List[int], k: int) -> Summary:
    return tuple(reversed(word + [None] * (k - len(word))))


def _fill(word: List[int], level: int, levels: Sequence[int], k: int) -> Summary:
    """Pad with zeros of the highest level below `level`, the least completion."""
    lower = [q for q in levels if q < level]
    if lower:
        word = word + [lower[-1] + 1] * (k - len(word))
    return _summary(word, k)


def qpt_lift(summary: Summary, priority: int, levels: Sequence[int]) -> Summary:
    """
    Least summary above `summary` once a vertex of `priority` is put in
    front of the play. `levels` are the even priorities of the game in
    ascending order. Words of priorities below `priority` start over. An
    odd priority keeps the words above it; an even one moves its own word
    to the next word in order, and when that word is the last one of its
    length, the next priority up takes the step instead.
    """
    if summary is TOP:
        return TOP
    k = len(summary)
    word = [b for b in reversed(summary) if b is not None]
    if priority & 1:
        return _fill([b for b in word if b > priority], priority, levels, k)
    for level in levels:
        if level < priority:
            continue
        head = [b for b in word if b >= level + 2]
        bits = [b for b in word if level <= b <= level + 1]
        room = k - len(head)
        if len(bits) < room:
            return _summary(head + bits + [level] + [level + 1] * (room - len(bits) - 1), k)
        while bits and bits[-1] == level:
            bits.pop()
        if bits:
            bits.pop()
            return _fill(head + bits, level, levels, k)
    return TOP


class QptTable(LiftingTable):
    """Play summaries of one player over a subgame, starting from the empty summary."""
    key = staticmethod(qpt_key)

    def __init__(self, game: ParityGame, members: List[int], player: int):
        prio = [p + player for p in game.prio_list]
        own = [prio[v] for v in members if not prio[v] & 1]
        self.k = qpt_width(len(own))
        self.levels = sorted(set(own))
        super().__init__(game, members, player, (None,) * self.k)

    def value(self, v: int, w: int) -> Summary:
        return qpt_lift(self.rho[w], self.prio[v], self.levels)


class QuasiPolynomialSolver(ProgressMeasureSolver):
    """Quasi-polynomial progress measures over play summaries."""
    name = "qpt"

    def make_tables(self, members: List[int]) -> List[LiftingTable]:
        return [QptTable(self.game, members, player) for player in (0, 1)]


def qpt_solve(game: ParityGame, subgame: Optional[VertexSet] = None) -> Solution:
    return QuasiPolynomialSolver(game).solve(subgame if subgame is not None else game.everything())
