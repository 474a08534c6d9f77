import logging
from typing import List, NamedTuple

import numpy as np

from ParityGameModule import ParityGame, Solution
from PreprocessModule import strongly_connected_components

logger = logging.getLogger(__name__)

UNSOLVED, STRATEGY, CLOSED, CYCLE = "unsolved", "strategy", "closed", "cycle"


class Violation(NamedTuple):
    clause: str
    vertex: int
    message: str

    def __str__(self) -> str:
        return f"[{self.clause}] vertex {self.vertex}: {self.message}"


def verify(game: ParityGame, solution: Solution) -> List[Violation]:
    """
    Check a solution against the game; an empty list means it is correct.

    strategy  every vertex owned by its winner plays into its own region
    closed    the loser cannot leave a region
    cycle     in a region with the winner fixed to its strategy, every
              cycle's top priority has the winner's parity
    """
    violations: List[Violation] = []
    winner = solution.winner.tolist()
    strategy = solution.strategy.tolist()
    owner, succ, prio = game.owner_list, game.successors, game.prio_list

    for v in range(game.n):
        if winner[v] < 0:
            violations.append(Violation(UNSOLVED, v, "no winner"))
    if violations:
        return violations

    induced: List[List[int]] = [[] for _ in range(game.n)]
    for v in range(game.n):
        alpha = winner[v]
        if owner[v] == alpha:
            s = strategy[v]
            if s not in succ[v]:
                violations.append(Violation(STRATEGY, v, f"strategy {s} is not a successor"))
            elif winner[s] != alpha:
                violations.append(Violation(STRATEGY, v, f"strategy {s} leaves the region of player {alpha}"))
            else:
                induced[v] = [s]
        else:
            for w in succ[v]:
                if winner[w] != alpha:
                    violations.append(Violation(CLOSED, v, f"player {1 - alpha} escapes to {w}"))
                    break
            induced[v] = [w for w in succ[v] if winner[w] == alpha]

    for alpha in (0, 1):
        violations.extend(_check_cycles(game, induced, np.asarray(winner) == alpha, alpha))

    if violations:
        logger.debug("verification found %d violations", len(violations))
    return violations


def _check_cycles(game: ParityGame, induced: List[List[int]], region: np.ndarray,
                  alpha: int) -> List[Violation]:
    """
    Peel SCCs: a nontrivial component whose top priority belongs to alpha
    loses its top vertices and the rest is checked again.
    """
    prio = game.prio_list
    violations = []
    pending = [region]
    while pending:
        mask = pending.pop()
        for component in strongly_connected_components(game, mask, induced):
            if len(component) == 1 and component[0] not in induced[component[0]]:
                continue
            top = max(prio[v] for v in component)
            if top & 1 != alpha:
                witness = min((v for v in component if prio[v] == top))
                violations.append(Violation(
                    CYCLE, witness, f"cycle with top priority {top} in the region of player {alpha}"))
                continue
            rest = np.zeros(game.n, dtype=bool)
            rest[[v for v in component if prio[v] != top]] = True
            if rest.any():
                pending.append(rest)
    return violations
