import csv
import itertools
import logging
import multiprocessing
import os
import queue
import time
from collections import deque
from dataclasses import asdict, dataclass, fields
from math import prod
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import psutil
from dotenv import load_dotenv
from rich.console import Console
from rich.table import Table

from ParityGameModule import (InfeasibleSpecError, InstanceTooLargeError, ParityGame, ParityGameError,
                              Solution)
from PreprocessModule import strongly_connected_components

ENV_FILE = os.path.join(os.path.dirname(__file__), '.env')
load_dotenv(dotenv_path=ENV_FILE)
DEFAULT_TIMEOUT = float(os.getenv("PG_TIMEOUT", 900))
PAR_FACTOR = float(os.getenv("PG_PAR_FACTOR", 2))
BRUTE_FORCE_LIMIT = int(os.getenv("PG_BRUTE_FORCE_LIMIT", 10_000_000))

logger = logging.getLogger(__name__)

GAME_CLASSES = ("lowdeg", "fullrandom", "steady")


# -----------------------------------------------------------------------
#  RANDOM GAMES
# -----------------------------------------------------------------------

@dataclass(frozen=True)
class GenSpec:
    """
    lowdeg      out-degree uniform in [1, 2], targets uniform
    fullrandom  out-degree uniform in [1, n - 1], targets uniform
    steady      out-degree uniform in [1, 4]; a random cycle through all
                vertices, then edges to vertices still under an in-degree
                target drawn from [1, 4]

    Priorities are uniform in [0, n) and owners uniform for every class.
    Degree bounds never exceed n - 1 since games carry no self-loops.
    """
    cls: str
    n: int
    min_deg: int
    max_deg: int
    seed: int = 0

    @classmethod
    def for_class(cls, game_class: str, n: int, seed: int = 0) -> "GenSpec":
        if game_class == "lowdeg":
            return cls(game_class, n, 1, 2, seed)
        if game_class == "fullrandom":
            return cls(game_class, n, 1, max(n - 1, 1), seed)
        if game_class == "steady":
            return cls(game_class, n, 1, 4, seed)
        raise InfeasibleSpecError(f"unknown game class {game_class!r}, expected one of {', '.join(GAME_CLASSES)}")

    @property
    def name(self) -> str:
        return f"{self.cls}-n{self.n}-s{self.seed}"


def gen_random_game(spec: GenSpec) -> ParityGame:
    if spec.cls not in GAME_CLASSES:
        raise InfeasibleSpecError(f"unknown game class {spec.cls!r}")
    if spec.n < 2:
        raise InfeasibleSpecError(f"need at least 2 vertices for a game without self-loops, got {spec.n}")
    max_deg = min(spec.max_deg, spec.n - 1)
    if spec.min_deg < 1 or spec.min_deg > max_deg:
        raise InfeasibleSpecError(
            f"out-degree bounds [{spec.min_deg}, {spec.max_deg}] infeasible for {spec.n} vertices")

    n = spec.n
    rng = np.random.default_rng(spec.seed)
    priority = rng.integers(0, n, size=n)
    owner = rng.integers(0, 2, size=n)
    degree = rng.integers(spec.min_deg, max_deg + 1, size=n)

    if spec.cls == "steady":
        successors = _steady_edges(rng, degree, n)
    else:
        successors = []
        for v in range(n):
            targets = rng.choice(n - 1, size=int(degree[v]), replace=False)
            # skip v itself
            successors.append([int(t) + int(t >= v) for t in targets])

    labels = [None] * n
    return ParityGame(priority.tolist(), owner.tolist(), successors, labels)


def _steady_edges(rng: np.random.Generator, degree: np.ndarray, n: int) -> List[List[int]]:
    """
    A random cycle through all vertices gives every vertex in- and
    out-degree 1. The remaining out-edges draw from a shuffled pool holding
    each vertex once per unit of in-degree it still lacks, falling back to a
    uniform target once the pool runs dry.
    """
    in_target = rng.integers(1, 5, size=n)
    order = rng.permutation(n).tolist()
    successors: List[List[int]] = [[] for _ in range(n)]
    for i, v in enumerate(order):
        successors[v].append(order[(i + 1) % n])

    pool = np.repeat(np.arange(n), in_target - 1)
    pool = rng.permutation(pool).tolist()
    for v in rng.permutation(n).tolist():
        chosen = set(successors[v])
        for _ in range(int(degree[v]) - 1):
            rejected = []
            w = -1
            while pool:
                u = pool.pop()
                if u != v and u not in chosen:
                    w = u
                    break
                rejected.append(u)
            pool.extend(reversed(rejected))
            while w < 0 or w == v or w in chosen:
                w = int(rng.integers(n))
            chosen.add(w)
            successors[v].append(w)
    return successors


# -----------------------------------------------------------------------
#  BRUTE-FORCE ORACLE
# -----------------------------------------------------------------------

def _opponent_wins(game: ParityGame, induced: List[List[int]], player: int) -> np.ndarray:
    """
    With `player` fixed to one successor everywhere, the opponent wins from
    exactly the vertices that reach a cycle whose top priority is the
    opponent's.
    """
    n, prio = game.n, game.prio_list
    seeds = np.zeros(n, dtype=bool)
    for p in sorted(set(prio)):
        if p & 1 == player:
            continue
        below = game.priority <= p
        for component in strongly_connected_components(game, below, induced):
            if not any(prio[v] == p for v in component):
                continue
            if len(component) > 1 or component[0] in induced[component[0]]:
                seeds[component] = True

    won = seeds.copy()
    frontier = deque(np.flatnonzero(seeds).tolist())
    pred: List[List[int]] = [[] for _ in range(n)]
    for v, targets in enumerate(induced):
        for w in targets:
            pred[w].append(v)
    while frontier:
        w = frontier.popleft()
        for u in pred[w]:
            if not won[u]:
                won[u] = True
                frontier.append(u)
    return won


def _best_positional(game: ParityGame, player: int) -> Tuple[np.ndarray, Dict[int, int]]:
    """
    Try every positional strategy of `player` and keep the one winning the
    most vertices; by positional determinacy it wins all of player's region.
    """
    own = [v for v in range(game.n) if game.owner_list[v] == player]
    best_won, best_count = np.zeros(game.n, dtype=bool), -1
    best: Dict[int, int] = {}
    for choice in itertools.product(*(game.successors[v] for v in own)):
        induced = [list(s) for s in game.successors]
        for v, w in zip(own, choice):
            induced[v] = [w]
        won = ~_opponent_wins(game, induced, player)
        count = int(won.sum())
        if count > best_count:
            best_won, best_count, best = won, count, dict(zip(own, choice))
    return best_won, best


def brute_force_solve(game: ParityGame, limit: int = BRUTE_FORCE_LIMIT) -> Solution:
    """
    Exact solution by enumerating positional strategies of both players.
    Meant as an oracle for small games only.
    """
    size = prod(len(s) for s in game.successors)
    if size > limit:
        raise InstanceTooLargeError(f"{size} positional strategy profiles exceed the limit of {limit}")

    solution = Solution.unsolved(game.n)
    if game.n == 0:
        return solution
    won_even, strategy_even = _best_positional(game, 0)
    won_odd, strategy_odd = _best_positional(game, 1)
    if np.any(won_even == won_odd):
        raise ParityGameError("enumerated winning regions do not partition the game")
    for v in range(game.n):
        winner = 0 if won_even[v] else 1
        strategy = (strategy_even if winner == 0 else strategy_odd).get(v, -1)
        solution.solve(v, winner, strategy)
    return solution


# -----------------------------------------------------------------------
#  BENCHMARK
# -----------------------------------------------------------------------

@dataclass
class BenchRecord:
    game: str
    game_class: str
    solver: str
    seconds: float
    timed_out: bool = False
    crashed: bool = False
    verified: bool = False

    @property
    def finished(self) -> bool:
        return not (self.timed_out or self.crashed)


def par2(records: Sequence[BenchRecord], timeout_s: float, factor: float = PAR_FACTOR) -> float:
    """Runtime of finished runs plus factor times the budget for the rest."""
    return sum(r.seconds if r.finished else factor * timeout_s for r in records)


def _bench_child(game: ParityGame, solver: str, options: dict, results) -> None:
    from SolverRegistry import solve_game

    result = solve_game(game, solver, check=True, **options)
    results.put((result.seconds, result.verified))


def _run_one(game: ParityGame, game_id: str, game_class: str, solver: str,
             timeout_s: float, options: dict) -> BenchRecord:
    ctx = multiprocessing.get_context("spawn")
    results = ctx.Queue()
    child = ctx.Process(target=_bench_child, args=(game, solver, options, results), daemon=True)
    start = time.perf_counter()
    child.start()
    child.join(timeout_s)
    elapsed = time.perf_counter() - start

    if child.is_alive():
        _kill_tree(child.pid)
        child.join()
        logger.info("%s on %s timed out after %.0f s", solver, game_id, timeout_s)
        return BenchRecord(game_id, game_class, solver, timeout_s, timed_out=True)
    try:
        seconds, verified = results.get(timeout=1.0)
    except queue.Empty:
        logger.warning("%s crashed on %s (exit code %s)", solver, game_id, child.exitcode)
        return BenchRecord(game_id, game_class, solver, timeout_s, crashed=True)
    if not verified:
        logger.warning("%s produced a rejected solution on %s", solver, game_id)
    logger.debug("%s on %s: %.3f s (%.3f s with process start)", solver, game_id, seconds, elapsed)
    return BenchRecord(game_id, game_class, solver, seconds, verified=verified)


def _kill_tree(pid: int) -> None:
    try:
        parent = psutil.Process(pid)
    except psutil.NoSuchProcess:
        return
    for proc in parent.children(recursive=True) + [parent]:
        try:
            proc.kill()
        except psutil.NoSuchProcess:
            pass


def run_benchmark(games: Sequence[Tuple[str, str, ParityGame]], solvers: Sequence[str],
                  timeout_s: float = DEFAULT_TIMEOUT, **options) -> List[BenchRecord]:
    """
    Run every solver on every (id, class, game) in its own child process
    with a wall-clock budget. A run past the budget is killed and counted
    as timed out; a run that dies without a result is counted as crashed.
    Runs go one at a time so they never compete for cores.
    """
    if timeout_s <= 0:
        raise ValueError(f"timeout must be positive, got {timeout_s}")
    logger.info("benchmark: %d games x %d solvers, timeout %.0f s, %s physical cores",
                len(games), len(solvers), timeout_s, psutil.cpu_count(logical=False))
    records = []
    for game_id, game_class, game in games:
        for solver in solvers:
            records.append(_run_one(game, game_id, game_class, solver, timeout_s, options))
    return records


def par2_rows(records: Sequence[BenchRecord], timeout_s: float,
              factor: float = PAR_FACTOR) -> List[dict]:
    groups: Dict[Tuple[str, str], List[BenchRecord]] = {}
    for r in records:
        groups.setdefault((r.solver, r.game_class), []).append(r)
    return [
        {"solver": solver, "class": game_class,
         "par2_seconds": round(par2(group, timeout_s, factor), 6),
         "timeouts": sum(not r.finished for r in group)}
        for (solver, game_class), group in sorted(groups.items())
    ]


def cactus_rows(records: Sequence[BenchRecord]) -> List[dict]:
    """Per solver, the runtimes of finished runs in ascending order."""
    rows = []
    for solver in sorted({r.solver for r in records}):
        times = sorted(r.seconds for r in records if r.solver == solver and r.finished)
        rows.extend({"solver": solver, "rank": i + 1, "seconds": round(t, 6)} for i, t in enumerate(times))
    return rows


def write_csv(rows: List[dict], path: Path, fieldnames: Sequence[str]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldnames))
        writer.writeheader()
        writer.writerows(rows)
    logger.info("wrote %s (%d rows)", path, len(rows))


def write_results(records: Sequence[BenchRecord], out_dir: Path, timeout_s: float,
                  factor: float = PAR_FACTOR) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(par2_rows(records, timeout_s, factor), out_dir / "par2.csv",
              ("solver", "class", "par2_seconds", "timeouts"))
    write_csv(cactus_rows(records), out_dir / "cactus.csv", ("solver", "rank", "seconds"))
    ordered = sorted(records, key=lambda r: (r.solver, r.game_class, r.game))
    write_csv([asdict(r) for r in ordered], out_dir / "records.csv", [f.name for f in fields(BenchRecord)])


def print_summary(records: Sequence[BenchRecord], timeout_s: float, factor: float = PAR_FACTOR,
                  console: Optional[Console] = None) -> None:
    table = Table(title=f"PAR{factor:g} (timeout {timeout_s:g} s)")
    for column in ("solver", "class", "PAR2 seconds", "timeouts"):
        table.add_column(column, justify="left" if column in ("solver", "class") else "right")
    for row in par2_rows(records, timeout_s, factor):
        table.add_row(row["solver"], row["class"], f"{row['par2_seconds']:.2f}", str(row["timeouts"]))
    (console or Console()).print(table)
