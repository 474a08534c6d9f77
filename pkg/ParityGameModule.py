import logging
import re
from collections import Counter, deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)


# -----------------------------------------------------------------------
#  ERRORS
# -----------------------------------------------------------------------

class ParityGameError(Exception):
    """Base class for everything this suite raises on purpose."""


class PGSolverParseError(ParityGameError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class EmptySubgameError(ParityGameError):
    pass


class InstanceTooLargeError(ParityGameError):
    pass


class InfeasibleSpecError(ParityGameError):
    pass


class UnknownSolverError(ParityGameError):
    pass


# -----------------------------------------------------------------------
#  PLAYERS
# -----------------------------------------------------------------------

class Player(IntEnum):
    EVEN = 0
    ODD = 1

    @property
    def opponent(self) -> "Player":
        return Player(1 - self)

    @classmethod
    def of(cls, priority: int) -> "Player":
        """The player who wins a play dominated by `priority`."""
        return cls(priority & 1)


# -----------------------------------------------------------------------
#  VERTEX SETS
# -----------------------------------------------------------------------

class VertexSet:
    """
    Dense boolean mask over the vertices of one game. Iteration yields the
    members in ascending index order, so it always agrees with membership.
    """
    __slots__ = ("mask",)

    def __init__(self, mask: np.ndarray):
        self.mask = mask

    @classmethod
    def empty(cls, n: int) -> "VertexSet":
        return cls(np.zeros(n, dtype=bool))

    @classmethod
    def full(cls, n: int) -> "VertexSet":
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def of(cls, n: int, vertices: Iterable[int]) -> "VertexSet":
        mask = np.zeros(n, dtype=bool)
        idx = list(vertices)
        if idx:
            mask[idx] = True
        return cls(mask)

    def __contains__(self, v: int) -> bool:
        return bool(self.mask[v])

    def __iter__(self) -> Iterator[int]:
        return iter(np.flatnonzero(self.mask).tolist())

    def __len__(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __bool__(self) -> bool:
        return bool(self.mask.any())

    def __eq__(self, other) -> bool:
        if not isinstance(other, VertexSet):
            return NotImplemented
        return bool(np.array_equal(self.mask, other.mask))

    def __or__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet(self.mask | other.mask)

    def __and__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet(self.mask & other.mask)

    def __sub__(self, other: "VertexSet") -> "VertexSet":
        return VertexSet(self.mask & ~other.mask)

    def __le__(self, other: "VertexSet") -> bool:
        return not bool((self.mask & ~other.mask).any())

    def __repr__(self) -> str:
        return f"VertexSet({list(self)})"

    def copy(self) -> "VertexSet":
        return VertexSet(self.mask.copy())


# -----------------------------------------------------------------------
#  GAME
# -----------------------------------------------------------------------

class ParityGame:
    """
    Immutable parity game over dense vertex ids 0..n-1.

    `successors[v]` keeps the input edge order; `predecessors[v]` is the
    exact edge reverse, built once. `original_ids[v]` is the id the vertex
    had in the file it was parsed from (or in the game it was derived from).
    """

    def __init__(self, priority: Sequence[int], owner: Sequence[int],
                 successors: Sequence[Sequence[int]],
                 labels: Optional[Sequence[Optional[str]]] = None,
                 original_ids: Optional[Sequence[int]] = None):
        n = len(priority)
        if len(owner) != n or len(successors) != n:
            raise ParityGameError("priority, owner and successor lists differ in length")

        self.n = n
        self.priority = np.asarray(priority, dtype=np.int64)
        self.owner = np.asarray(owner, dtype=np.int8)
        self.successors: Tuple[Tuple[int, ...], ...] = tuple(tuple(int(w) for w in s) for s in successors)
        self.labels: Tuple[Optional[str], ...] = tuple(labels) if labels is not None else (None,) * n
        if original_ids is None:
            self.original_ids = np.arange(n, dtype=np.int64)
        else:
            self.original_ids = np.asarray(original_ids, dtype=np.int64)

        preds: List[List[int]] = [[] for _ in range(n)]
        for v, succ in enumerate(self.successors):
            if not succ:
                raise ParityGameError(f"vertex {v} has no successors")
            for w in succ:
                if w < 0 or w >= n:
                    raise ParityGameError(f"vertex {v} has successor {w} out of range")
                preds[w].append(v)
        self.predecessors: Tuple[Tuple[int, ...], ...] = tuple(tuple(p) for p in preds)

        self.priority.setflags(write=False)
        self.owner.setflags(write=False)
        self.original_ids.setflags(write=False)

        # Plain lists for the hot loops; numpy scalar indexing is slow there.
        self.prio_list: List[int] = self.priority.tolist()
        self.owner_list: List[int] = self.owner.tolist()
        self.is_sorted = bool(n == 0 or np.all(self.priority[:-1] <= self.priority[1:]))

    @property
    def max_priority(self) -> int:
        return int(self.priority.max()) if self.n else 0

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.successors)

    def everything(self) -> VertexSet:
        return VertexSet.full(self.n)

    def nothing(self) -> VertexSet:
        return VertexSet.empty(self.n)

    def has_self_loop(self, v: int) -> bool:
        return v in self.successors[v]

    def without_self_loops(self, vertices: Iterable[int]) -> "ParityGame":
        """Copy of the game with the self-loop of each given vertex dropped."""
        drop = set(vertices)
        succ = [[w for w in s if not (v in drop and w == v)] for v, s in enumerate(self.successors)]
        return ParityGame(self.priority, self.owner, succ, self.labels, self.original_ids)

    def with_priorities(self, priority: Sequence[int]) -> "ParityGame":
        return ParityGame(priority, self.owner, self.successors, self.labels, self.original_ids)

    def permute(self, order: Sequence[int]) -> "ParityGame":
        """New game whose vertex i is old vertex order[i]."""
        order = [int(v) for v in order]
        new_id = [0] * self.n
        for i, v in enumerate(order):
            new_id[v] = i
        return ParityGame(
            [self.prio_list[v] for v in order],
            [self.owner_list[v] for v in order],
            [[new_id[w] for w in self.successors[v]] for v in order],
            [self.labels[v] for v in order],
            [int(self.original_ids[v]) for v in order],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParityGame):
            return NotImplemented
        return (self.n == other.n
                and np.array_equal(self.priority, other.priority)
                and np.array_equal(self.owner, other.owner)
                and self.successors == other.successors
                and self.labels == other.labels)

    def __hash__(self):
        return hash((self.n, self.successors))

    def __repr__(self) -> str:
        return f"ParityGame(n={self.n}, edges={self.n_edges}, d={self.max_priority})"


@dataclass
class Solution:
    """
    Per-vertex winner (-1 while unknown) and strategy successor (-1 for none).
    """
    winner: np.ndarray
    strategy: np.ndarray

    @classmethod
    def unsolved(cls, n: int) -> "Solution":
        return cls(np.full(n, -1, dtype=np.int8), np.full(n, -1, dtype=np.int64))

    @property
    def n(self) -> int:
        return len(self.winner)

    def solve(self, v: int, winner: int, strategy: int = -1) -> None:
        self.winner[v] = winner
        self.strategy[v] = strategy

    def is_solved(self, v: int) -> bool:
        return self.winner[v] >= 0

    def solved(self) -> VertexSet:
        return VertexSet(self.winner >= 0)

    def is_complete(self) -> bool:
        return bool(np.all(self.winner >= 0))

    def merge(self, other: "Solution") -> None:
        """Copy every vertex `other` has solved into this solution."""
        done = other.winner >= 0
        self.winner[done] = other.winner[done]
        self.strategy[done] = other.strategy[done]

    def renamed(self, renaming: Sequence[int]) -> "Solution":
        """
        Map a solution over a renamed game back to the source game, where
        `renaming[i]` is the source id of vertex i.
        """
        renaming = np.asarray(renaming, dtype=np.int64)
        out = Solution.unsolved(len(renaming))
        out.winner[renaming] = self.winner
        has = self.strategy >= 0
        mapped = np.full(len(renaming), -1, dtype=np.int64)
        mapped[has] = renaming[self.strategy[has]]
        out.strategy[renaming] = mapped
        return out


# -----------------------------------------------------------------------
#  PGSOLVER FORMAT
# -----------------------------------------------------------------------

_HEADER_RE = re.compile(r"\s*parity\s+(\d+)\s*;\s*")
_START_RE = re.compile(r"\s*start\s+(\d+)\s*;\s*")
_VERTEX_RE = re.compile(
    r"\s*(\d+)\s+(\d+)\s+(\d+)\s*((?:\d+\s*(?:,\s*\d+\s*)*)?)"
    r'(?:"((?:[^"\\]|\\.)*)")?\s*;\s*'
)
_SOLUTION_HEADER_RE = re.compile(r"\s*paritysol\s+(-?\d+)\s*;\s*")
_SOLUTION_RE = re.compile(r"\s*(\d+)\s+([01])(?:\s+(\d+))?\s*;\s*")


def _decode_text(text: Union[bytes, str]) -> str:
    if isinstance(text, bytes):
        try:
            return text.decode("utf-8")
        except UnicodeDecodeError as e:
            line = text.count(b"\n", 0, e.start) + 1
            raise PGSolverParseError(line, f"invalid UTF-8 byte 0x{text[e.start]:02x}") from e
    return text


def parse_pgsolver(text: Union[bytes, str]) -> ParityGame:
    """
    Parse a game in PGSolver format. The `parity N;` header is optional.
    Sparse ids are compacted in order of appearance; the input ids are kept
    in `original_ids`.
    """
    text = _decode_text(text)
    ids: List[int] = []
    prio: List[int] = []
    owner: List[int] = []
    succ: List[List[int]] = []
    labels: List[Optional[str]] = []
    line_of: List[int] = []
    index: Dict[int, int] = {}
    seen_body = False

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if not seen_body and _HEADER_RE.fullmatch(line):
            seen_body = True
            continue
        if _START_RE.fullmatch(line):
            continue
        m = _VERTEX_RE.fullmatch(line)
        if m is None:
            raise PGSolverParseError(lineno, f"cannot parse {line.strip()!r}")
        seen_body = True
        vid, pr, ow, edges, label = m.groups()
        vid = int(vid)
        if vid in index:
            raise PGSolverParseError(lineno, f"duplicate vertex id {vid}")
        if ow not in ("0", "1"):
            raise PGSolverParseError(lineno, f"owner must be 0 or 1, got {ow}")
        targets = [int(t) for t in edges.replace(",", " ").split()]
        if not targets:
            raise PGSolverParseError(lineno, f"vertex {vid} has no successors")
        index[vid] = len(ids)
        ids.append(vid)
        prio.append(int(pr))
        owner.append(int(ow))
        succ.append(targets)
        labels.append(label.replace('\\"', '"') if label is not None else None)
        line_of.append(lineno)

    dense: List[List[int]] = []
    for v, targets in enumerate(succ):
        row = []
        for t in targets:
            if t not in index:
                raise PGSolverParseError(line_of[v], f"successor {t} of vertex {ids[v]} is not a vertex")
            row.append(index[t])
        dense.append(row)

    game = ParityGame(prio, owner, dense, labels, ids)
    logger.debug("parsed %r", game)
    return game


def write_pgsolver(game: ParityGame) -> str:
    lines = [f"parity {game.n - 1};"]
    for v in range(game.n):
        line = f"{v} {game.prio_list[v]} {game.owner_list[v]} " + ",".join(map(str, game.successors[v]))
        label = game.labels[v]
        if label is not None:
            line += ' "' + label.replace('"', '\\"') + '"'
        lines.append(line + ";")
    return "\n".join(lines) + "\n"


def write_solution(solution: Solution, original_ids: Optional[Sequence[int]] = None) -> str:
    """Solved vertices only; with `original_ids`, vertex ids are written as in the source file."""
    name = (lambda v: int(original_ids[v])) if original_ids is not None else int
    top = max((int(i) for i in original_ids), default=-1) if original_ids is not None else solution.n - 1
    lines = [f"paritysol {top};"]
    for v in range(solution.n):
        if solution.winner[v] < 0:
            continue
        s = int(solution.strategy[v])
        if s >= 0:
            lines.append(f"{name(v)} {int(solution.winner[v])} {name(s)};")
        else:
            lines.append(f"{name(v)} {int(solution.winner[v])};")
    return "\n".join(lines) + "\n"


def parse_solution(text: Union[bytes, str], n: int,
                   original_ids: Optional[Sequence[int]] = None) -> Solution:
    text = _decode_text(text)
    if original_ids is not None:
        index = {int(i): v for v, i in enumerate(original_ids)}
    else:
        index = {v: v for v in range(n)}
    solution = Solution.unsolved(n)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or _SOLUTION_HEADER_RE.fullmatch(line):
            continue
        m = _SOLUTION_RE.fullmatch(line)
        if m is None:
            raise PGSolverParseError(lineno, f"cannot parse {line.strip()!r}")
        v, w, s = int(m.group(1)), int(m.group(2)), m.group(3)
        if v not in index:
            raise PGSolverParseError(lineno, f"vertex {v} is not in the game")
        if s is not None and int(s) not in index:
            raise PGSolverParseError(lineno, f"strategy {s} of vertex {v} is not in the game")
        solution.solve(index[v], w, index[int(s)] if s is not None else -1)
    return solution


# -----------------------------------------------------------------------
#  ATTRACTOR
# -----------------------------------------------------------------------

class Attractor:
    """
    Backward attractor over predecessor lists. Every opponent vertex keeps
    a counter of successors not yet attracted; the counters are only
    initialised when first touched in a call (a per-vertex stamp against
    the current call number), so no O(n) clearing happens between calls.
    """

    def __init__(self, game: ParityGame):
        self.game = game
        self._count = [0] * game.n
        self._stamp = [0] * game.n
        self._epoch = 0
        self.calls = 0

    def run(self, subgame: np.ndarray, player: int, target: np.ndarray,
            strategy: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Returns the mask of Attr_player(target) inside `subgame`. When
        `strategy` is given, every attracted player-owned vertex gets the
        successor that pulled it in.
        """
        game = self.game
        self._epoch += 1
        self.calls += 1
        epoch = self._epoch
        count, stamp = self._count, self._stamp
        owner, succ, pred = game.owner_list, game.successors, game.predecessors

        result = target & subgame
        inside = result.tolist()
        in_sub = subgame.tolist()
        queue = deque(np.flatnonzero(result).tolist())
        while queue:
            w = queue.popleft()
            for u in pred[w]:
                if not in_sub[u] or inside[u]:
                    continue
                if owner[u] == player:
                    inside[u] = True
                    if strategy is not None:
                        strategy[u] = w
                    queue.append(u)
                    continue
                if stamp[u] != epoch:
                    stamp[u] = epoch
                    count[u] = sum(1 for x in succ[u] if in_sub[x])
                count[u] -= 1
                if count[u] == 0:
                    inside[u] = True
                    if strategy is not None:
                        strategy[u] = -1
                    queue.append(u)
        return np.asarray(inside, dtype=bool)


def attractor(game: ParityGame, subgame: VertexSet, player: int,
              target: VertexSet) -> Tuple[VertexSet, Dict[int, int]]:
    strategy = np.full(game.n, -1, dtype=np.int64)
    result = Attractor(game).run(subgame.mask, int(player), target.mask, strategy)
    added = result & ~target.mask
    pulled = {v: int(strategy[v]) for v in np.flatnonzero(added).tolist()
              if game.owner_list[v] == player}
    return VertexSet(result), pulled


def top_priority(game: ParityGame, subgame: VertexSet) -> int:
    """On a priority-sorted game, the first member found scanning down from the top."""
    mask = subgame.mask
    if game.is_sorted:
        for v in range(game.n - 1, -1, -1):
            if mask[v]:
                return game.prio_list[v]
    elif mask.any():
        return int(game.priority[mask].max())
    raise EmptySubgameError("top priority of an empty vertex set")


# -----------------------------------------------------------------------
#  PRIORITY RENUMBERING
# -----------------------------------------------------------------------

def _renumber(game: ParityGame, gap: int) -> Dict[int, int]:
    """
    Walk the distinct priorities upward. The first keeps its parity and
    becomes 0 or 1; a parity change always steps by one, same parity steps
    by `gap` (2 keeps distinct priorities apart, 0 merges the block).
    """
    distinct = sorted(set(game.prio_list))
    table: Dict[int, int] = {}
    current = None
    for p in distinct:
        if current is None:
            current = p & 1
        elif (p & 1) != (current & 1):
            current += 1
        else:
            current += gap
        table[p] = current
    return table


def normalize(game: ParityGame) -> Tuple[ParityGame, np.ndarray]:
    """
    Sort vertices by priority (stable) and close the gaps between distinct
    priorities without merging any. Returns the new game and `renaming`,
    where renaming[i] is the vertex of `game` that became vertex i.
    """
    order = np.argsort(game.priority, kind="stable")
    table = _renumber(game, gap=2)
    sorted_game = game.permute(order)
    normalized = sorted_game.with_priorities([table[p] for p in sorted_game.prio_list])
    return normalized, order.astype(np.int64)


def compress_priorities(game: ParityGame) -> ParityGame:
    table = _renumber(game, gap=0)
    return game.with_priorities([table[p] for p in game.prio_list])


def inflate_priorities(game: ParityGame) -> ParityGame:
    """
    Give every vertex its own priority: vertices are taken in (priority,
    index) order and each gets the next value of the right parity.
    """
    new = [0] * game.n
    current = -1
    for v in sorted(range(game.n), key=lambda x: (game.prio_list[x], x)):
        parity = game.prio_list[v] & 1
        current += 1
        if (current & 1) != parity:
            current += 1
        new[v] = current
    return game.with_priorities(new)


# -----------------------------------------------------------------------
#  SOLVER BASE
# -----------------------------------------------------------------------

class Solver:
    """
    A solver is bound to one game and solves any total subgame of it.
    `solve` returns a Solution over the whole game in which exactly the
    subgame's vertices are decided. `stats` collects work counters.
    """
    name = "solver"

    def __init__(self, game: ParityGame):
        self.game = game
        self.stats: Counter = Counter()

    def solve(self, subgame: VertexSet) -> Solution:
        raise NotImplementedError

    def solve_all(self) -> Solution:
        return self.solve(self.game.everything())
