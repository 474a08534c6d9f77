import logging
from collections import deque
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from ParityGameModule import Attractor, ParityGame, ParityGameError, Solution, Solver, VertexSet

logger = logging.getLogger(__name__)

BOT = -1
DISABLED = -2

OPEN, ESCAPES, DOMINION = "open", "escapes", "dominion"

VARIANTS = ("pp", "ppp", "rr", "dp", "rrdp")


class RegionStatus(NamedTuple):
    kind: str
    target: Optional[int] = None


class PriorityPromotionSolver(Solver):
    """
    Priority promotion. `region[v]` is the measure of the region holding v
    (BOT while unassigned, DISABLED outside the subgame or once solved); a
    region is identified by its measure and belongs to the player with that
    parity. Regions are built top-down by attracting to the top vertices of
    what is left. A region the opponent cannot leave downwards is either a
    dominion or promoted to the lowest higher region the opponent can
    escape to, after which lower regions are reset per variant:

    pp    reset every lower region
    ppp   reset only lower regions of the opponent
    rr    reset only lower opponent regions that the owner can now leave
          into the promoted vertices
    dp    as ppp, but a promotion that would reset anything is delayed
          while lower regions remain to be built
    rrdp  rr resets with dp delays
    """
    name = "pp"

    def __init__(self, game: ParityGame, variant: Optional[str] = None):
        super().__init__(game)
        variant = variant or self.name
        if variant not in VARIANTS:
            raise ParityGameError(f"unknown priority promotion variant {variant!r}")
        self.variant = variant
        n = game.n
        self.region: List[int] = [DISABLED] * n
        self.strategy: List[int] = [-1] * n
        self._count = [0] * n
        self._stamp = [-1] * n
        self._calls = 0
        self._halted: Optional[Tuple[int, RegionStatus]] = None

    # -------------------------------------------------------------------
    #  REGIONS
    # -------------------------------------------------------------------

    def members(self, m: int) -> List[int]:
        return [v for v, r in enumerate(self.region) if r == m]

    def _reset(self, vertices: List[int]) -> None:
        for v in vertices:
            self.region[v] = BOT
            self.strategy[v] = -1
        self.stats["resets"] += len(vertices)

    def _next_level(self, m: Optional[int]) -> Optional[int]:
        """Highest measure below m that is still to be (re)built."""
        prio = self.game.prio_list
        best = None
        for v, r in enumerate(self.region):
            if r == BOT:
                level = prio[v]
            elif 0 <= r and (m is None or r < m):
                level = r
            else:
                continue
            if best is None or level > best:
                best = level
        return best

    def _build(self, m: int) -> None:
        """
        Region m takes the unassigned vertices of priority m and attracts
        for its player inside everything not in a higher region. Taking a
        vertex out of a kept lower region resets that region.
        """
        game = self.game
        region, strategy = self.region, self.strategy
        owner, succ, pred, prio = game.owner_list, game.successors, game.predecessors, game.prio_list
        alpha = m & 1
        for v, r in enumerate(region):
            if r == BOT and prio[v] == m:
                region[v] = m
                strategy[v] = -1

        self._calls += 1
        call = self._calls
        count, stamp = self._count, self._stamp
        queue = deque(self.members(m))
        while queue:
            w = queue.popleft()
            for u in pred[w]:
                ru = region[u]
                if not (ru == BOT or 0 <= ru < m):
                    continue
                if owner[u] != alpha:
                    if stamp[u] != call:
                        stamp[u] = call
                        count[u] = sum(1 for x in succ[u] if region[x] == BOT or 0 <= region[x] <= m)
                    count[u] -= 1
                    if count[u]:
                        continue
                if ru >= 0:
                    self.stats["steal resets"] += 1
                    self._reset(self.members(ru))
                region[u] = m
                strategy[u] = w if owner[u] == alpha else -1
                queue.append(u)
        self.stats["regions"] += 1

    def decompose(self, top: Optional[int] = None,
                  stop: Optional[Callable[[int], bool]] = None) -> List[int]:
        """
        Build regions from measure `top` (the highest unassigned priority by
        default) downwards. Without `stop` this goes all the way down;
        otherwise it ends after the first region m with stop(m) true.
        Returns the measures built, highest first.
        """
        built = []
        m = top if top is not None else self._next_level(None)
        while m is not None:
            self._build(m)
            built.append(m)
            if stop is not None and stop(m):
                break
            m = self._next_level(m)
        return built

    def region_status(self, m: int) -> RegionStatus:
        """
        OPEN when the opponent can move down out of region m or the owner
        cannot stay in it; otherwise the lowest higher region the opponent
        can escape to, or DOMINION when there is none.
        """
        game = self.game
        region, strategy = self.region, self.strategy
        owner, succ, prio = game.owner_list, game.successors, game.prio_list
        alpha = m & 1
        target = None
        for v in self.members(m):
            if owner[v] == alpha:
                s = strategy[v]
                if s < 0 or region[s] != m:
                    if prio[v] != m:
                        return RegionStatus(OPEN)
                    s = next((w for w in succ[v] if region[w] == m), -1)
                    if s < 0:
                        return RegionStatus(OPEN)
                    strategy[v] = s
                continue
            for w in succ[v]:
                rw = region[w]
                if rw == DISABLED or rw == m:
                    continue
                if rw == BOT or rw < m:
                    return RegionStatus(OPEN)
                if target is None or rw < target:
                    target = rw
        if target is None:
            return RegionStatus(DOMINION)
        if target & 1 != alpha:
            raise ParityGameError(f"region {m} escapes to opponent region {target}")
        return RegionStatus(ESCAPES, target)

    def _to_reset(self, m: int, q: int, promoted: List[int]) -> List[int]:
        """Lower regions a promotion of region m to q resets, as vertices."""
        alpha = m & 1
        lower = [v for v, r in enumerate(self.region) if 0 <= r < q and r != m]
        if self.variant == "pp":
            return lower
        lower = [v for v in lower if self.region[v] & 1 != alpha]
        if self.variant in ("ppp", "dp"):
            return lower
        # rr: only opponent regions the owner of region m can now leave into it
        inside = set(promoted)
        owner, succ = self.game.owner_list, self.game.successors
        opened = {self.region[v] for v in lower
                  if owner[v] == alpha and any(w in inside for w in succ[v])}
        return [v for v in lower if self.region[v] in opened]

    def promote(self, m: int, q: int) -> None:
        promoted = self.members(m)
        reset = self._to_reset(m, q, promoted)
        for v in promoted:
            self.region[v] = q
        self._reset(reset)
        self.stats["promotions"] += 1
        logger.debug("promoted region %d to %d (%d vertices, %d reset)",
                     m, q, len(promoted), len(reset))

    def _dominion(self, m: int, remaining: np.ndarray, solution: Solution) -> None:
        game = self.game
        alpha = m & 1
        dominion = np.zeros(game.n, dtype=bool)
        dominion[self.members(m)] = True
        strategy = np.full(game.n, -1, dtype=np.int64)
        won = Attractor(game).run(remaining, alpha, dominion, strategy)
        for v in np.flatnonzero(won).tolist():
            s = -1
            if game.owner_list[v] == alpha:
                s = self.strategy[v] if dominion[v] else int(strategy[v])
            solution.solve(v, alpha, s)
        remaining &= ~won
        for v in range(game.n):
            if won[v]:
                self.region[v] = DISABLED
            elif remaining[v]:
                self.region[v] = BOT
                self.strategy[v] = -1
        self.stats["dominions"] += 1
        logger.debug("dominion of measure %d for player %d (%d vertices)",
                     m, alpha, int(won.sum()))

    # -------------------------------------------------------------------
    #  SOLVER
    # -------------------------------------------------------------------

    def solve(self, subgame: VertexSet) -> Solution:
        game = self.game
        solution = Solution.unsolved(game.n)
        remaining = subgame.mask.copy()
        mask = remaining.tolist()
        for v in range(game.n):
            self.region[v] = BOT if mask[v] else DISABLED
            self.strategy[v] = -1
        delaying = self.variant in ("dp", "rrdp")

        while remaining.any():
            delayed: Dict[int, int] = {}
            m = self._next_level(None)
            while True:
                self._halted = None
                self.decompose(m, stop=lambda k: self._halt_at(k, delayed, delaying))
                if self._halted is None:
                    m = self._resume_delayed(delayed, remaining, solution)
                    if m is None:
                        break
                    continue
                m, status = self._halted
                if status.kind == DOMINION:
                    self._dominion(m, remaining, solution)
                    break
                q = status.target
                self.promote(m, q)
                # delayed regions at or below q may have been reset or merged
                for k in [k for k in delayed if k <= q]:
                    del delayed[k]
                m = q

        logger.debug("%s: %s", self.name, dict(self.stats))
        return solution

    def _halt_at(self, m: int, delayed: Dict[int, int], delaying: bool) -> bool:
        """
        True when region m is closed and has to be dealt with now. A
        promotion that would reset something is delayed instead while
        lower regions remain to be built.
        """
        status = self.region_status(m)
        if status.kind == OPEN:
            return False
        if (status.kind == ESCAPES and delaying and m not in delayed
                and self._next_level(m) is not None
                and self._to_reset(m, status.target, self.members(m))):
            delayed[m] = status.target
            self.stats["delays"] += 1
            return False
        self._halted = (m, status)
        return True

    def _resume_delayed(self, delayed: Dict[int, int], remaining: np.ndarray,
                        solution: Solution) -> Optional[int]:
        """
        Out of regions to build: carry out the lowest delayed promotion.
        Returns the measure to continue from, or None after a dominion.
        """
        while delayed:
            m = min(delayed)
            del delayed[m]
            if not self.members(m):
                # emptied by a steal since it was delayed
                continue
            status = self.region_status(m)
            if status.kind == DOMINION:
                self._dominion(m, remaining, solution)
                return None
            if status.kind == ESCAPES:
                self.promote(m, status.target)
                for k in [k for k in delayed if k <= status.target]:
                    del delayed[k]
                return status.target
        raise ParityGameError("no closed region left to promote")


class PPPlusSolver(PriorityPromotionSolver):
    name = "ppp"


class RegionRecoverySolver(PriorityPromotionSolver):
    name = "rr"


class DelayedPromotionSolver(PriorityPromotionSolver):
    name = "dp"


class RegionRecoveryDelayedSolver(PriorityPromotionSolver):
    name = "rrdp"


def pp_solve(game: ParityGame, subgame: Optional[VertexSet] = None, variant: str = "pp") -> Solution:
    solver = PriorityPromotionSolver(game, variant)
    return solver.solve(subgame if subgame is not None else game.everything())
