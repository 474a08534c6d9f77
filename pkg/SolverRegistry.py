import logging
import os
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Type

from dotenv import load_dotenv

from ParityGameModule import (ParityGame, ParityGameError, Solution, Solver, UnknownSolverError,
                              compress_priorities, inflate_priorities, normalize)
from PreprocessModule import preprocess, scc_solve
from PriorityPromotionModule import (DelayedPromotionSolver, PPPlusSolver, PriorityPromotionSolver,
                                     RegionRecoveryDelayedSolver, RegionRecoverySolver)
from ProgressMeasureModule import QuasiPolynomialSolver, SmallProgressMeasuresSolver
from VerifierModule import Violation, verify
from ZielonkaModule import UnoptimizedZielonkaSolver, ZielonkaSolver

ENV_FILE = os.path.join(os.path.dirname(__file__), '.env')
load_dotenv(dotenv_path=ENV_FILE)
DEFAULT_SOLVER = os.getenv("PG_SOLVER", "zlk")
DEFAULT_WORKERS = int(os.getenv("PG_WORKERS", 1))

logger = logging.getLogger(__name__)

SOLVERS: Dict[str, Type[Solver]] = {
    cls.name: cls for cls in (
        ZielonkaSolver,
        UnoptimizedZielonkaSolver,
        SmallProgressMeasuresSolver,
        QuasiPolynomialSolver,
        PriorityPromotionSolver,
        PPPlusSolver,
        RegionRecoverySolver,
        DelayedPromotionSolver,
        RegionRecoveryDelayedSolver,
    )
}


def get_solver(name: str) -> Type[Solver]:
    try:
        return SOLVERS[name]
    except KeyError:
        raise UnknownSolverError(
            f"unknown solver {name!r}, expected one of {', '.join(SOLVERS)}") from None


def make_solver(name: str, game: ParityGame, workers: int = 1) -> Solver:
    cls = get_solver(name)
    if issubclass(cls, ZielonkaSolver):
        return cls(game, workers=workers)
    return cls(game)


@dataclass
class SolveResult:
    solution: Solution
    seconds: float
    stats: Counter = field(default_factory=Counter)
    violations: List[Violation] = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return not self.violations


def solve_game(game: ParityGame, solver: str = DEFAULT_SOLVER, workers: int = DEFAULT_WORKERS,
               loops: bool = True, wcwc: bool = True, single: bool = True, scc: bool = False,
               inflate: bool = False, compress: bool = False, check: bool = False) -> SolveResult:
    """
    Full pipeline: reorder and renumber (always), optionally inflate or
    compress priorities, run the enabled preprocessors, solve what is left
    (bottom SCC by bottom SCC with `scc`), and map the solution back to the
    ids of `game`. With `check` the result is verified against `game`.
    """
    if inflate and compress:
        raise ValueError("inflate and compress exclude each other")
    get_solver(solver)
    start = time.perf_counter()

    work, renaming = normalize(game)
    if inflate:
        work = inflate_priorities(work)
    elif compress:
        work = compress_priorities(work)

    pre = preprocess(work, loops=loops, wcwc=wcwc, single=single)
    stats: Counter = Counter(pre.statistics)
    solution = pre.solved
    if pre.remaining:
        engine = make_solver(solver, pre.game, workers)
        if scc:
            part = scc_solve(pre.game, engine, pre.remaining)
        else:
            part = engine.solve(pre.remaining)
        solution.merge(part)
        stats.update(engine.stats)
    if not solution.is_complete():
        raise ParityGameError(f"{solver} left {int((solution.winner < 0).sum())} vertices undecided")
    solution = solution.renamed(renaming)
    seconds = time.perf_counter() - start
    logger.info("%s solved %d vertices in %.3f s", solver, game.n, seconds)

    result = SolveResult(solution, seconds, stats)
    if check:
        result.violations = verify(game, solution)
        if result.violations:
            logger.warning("solution rejected: %d violations, first %s",
                           len(result.violations), result.violations[0])
    return result
