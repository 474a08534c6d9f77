import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from dotenv import load_dotenv, set_key
from rich.console import Console
from rich.logging import RichHandler

import HarnessModule as hm
from ParityGameModule import (InfeasibleSpecError, PGSolverParseError, UnknownSolverError, parse_pgsolver,
                              parse_solution, write_pgsolver, write_solution)
from SolverRegistry import DEFAULT_SOLVER, DEFAULT_WORKERS, SOLVERS, get_solver, solve_game
from VerifierModule import verify

# Load environment variables from .env
ENV_FILE = os.path.join(os.path.dirname(__file__), '.env')
load_dotenv(dotenv_path=ENV_FILE)

EXIT_OK, EXIT_USAGE, EXIT_REJECTED, EXIT_PARSE = 0, 2, 3, 4

logger = logging.getLogger("paritygames")
console = Console(stderr=True)


def update_env_variable(key, value):
    set_key(ENV_FILE, key, str(value))
    load_dotenv(ENV_FILE, override=True)


def configure_logging(level: Optional[str] = None) -> None:
    level = (level or os.getenv("PG_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=False)],
        force=True,
    )


def read_game(path: Optional[str]):
    if path is None or path == "-":
        return parse_pgsolver(sys.stdin.read())
    return parse_pgsolver(Path(path).read_bytes())


def write_output(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
        logger.info("wrote %s", path)


# -----------------------------------------------------------------------
#  SUBCOMMANDS
# -----------------------------------------------------------------------

def _pipeline_options(args) -> dict:
    return dict(workers=args.workers, loops=not args.no_loops, wcwc=not args.no_wcwc,
                single=not args.no_single, scc=args.scc, inflate=args.inflate, compress=args.compress)


def cmd_solve(args) -> int:
    get_solver(args.solver)
    game = read_game(args.game)
    result = solve_game(game, args.solver, check=args.verify, **_pipeline_options(args))
    write_output(write_solution(result.solution, game.original_ids), args.output)
    if args.stats:
        for key, value in sorted(result.stats.items()):
            console.print(f"{key}: {value}")
        console.print(f"time: {result.seconds:.3f} s")
    if args.verify:
        for violation in result.violations:
            console.print(f"[red]{violation}[/red]")
        if result.violations:
            return EXIT_REJECTED
        logger.info("solution verified")
    return EXIT_OK


def cmd_gen(args) -> int:
    specs = []
    for i in range(args.count):
        spec = hm.GenSpec.for_class(args.game_class, args.n, args.seed + i)
        if args.min_deg is not None or args.max_deg is not None:
            spec = hm.GenSpec(spec.cls, spec.n,
                              spec.min_deg if args.min_deg is None else args.min_deg,
                              spec.max_deg if args.max_deg is None else args.max_deg, spec.seed)
        specs.append(spec)

    if args.count == 1 and args.out_dir is None:
        write_output(write_pgsolver(hm.gen_random_game(specs[0])), args.output)
        return EXIT_OK
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    for spec in specs:
        (out_dir / f"{spec.name}.pg").write_text(write_pgsolver(hm.gen_random_game(spec)))
    logger.info("wrote %d %s games to %s", len(specs), args.game_class, out_dir)
    return EXIT_OK


def cmd_bench(args) -> int:
    solvers = args.solver or [DEFAULT_SOLVER]
    for name in solvers:
        get_solver(name)

    games = []
    for path in args.games:
        path = Path(path)
        games.append((path.stem, path.parent.name or "file", parse_pgsolver(path.read_bytes())))
    if not args.games:
        for game_class in args.game_class:
            for n in args.sizes:
                for i in range(args.count):
                    spec = hm.GenSpec.for_class(game_class, n, args.seed + i)
                    games.append((spec.name, game_class, hm.gen_random_game(spec)))

    records = hm.run_benchmark(games, solvers, args.timeout, **_pipeline_options(args))
    hm.write_results(records, Path(args.out_dir), args.timeout, args.factor)
    hm.print_summary(records, args.timeout, args.factor)
    if args.save_defaults:
        update_env_variable("PG_TIMEOUT", args.timeout)
        update_env_variable("PG_PAR_FACTOR", args.factor)
        update_env_variable("PG_WORKERS", args.workers)
    rejected = [r for r in records if r.finished and not r.verified]
    return EXIT_REJECTED if rejected else EXIT_OK


def cmd_verify(args) -> int:
    game = read_game(args.game)
    solution = parse_solution(Path(args.solution).read_bytes(), game.n, game.original_ids)
    violations = verify(game, solution)
    for violation in violations:
        console.print(f"[red]{violation}[/red]")
    if violations:
        logger.error("solution rejected with %d violations", len(violations))
        return EXIT_REJECTED
    logger.info("solution verified")
    return EXIT_OK


# -----------------------------------------------------------------------
#  ARGUMENTS
# -----------------------------------------------------------------------

def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--workers", type=int, default=DEFAULT_WORKERS,
                        help="threads for the parallel attractor of zlk / uzlk")
    parser.add_argument("--no-loops", action="store_true", help="skip self-loop solving")
    parser.add_argument("--no-wcwc", action="store_true", help="skip winner-controlled winning cycles")
    parser.add_argument("--no-single", action="store_true", help="skip single-parity detection")
    parser.add_argument("--scc", action="store_true", help="solve bottom SCC by bottom SCC")
    renumber = parser.add_mutually_exclusive_group()
    renumber.add_argument("--inflate", action="store_true", help="give every vertex its own priority")
    renumber.add_argument("--compress", action="store_true", help="merge same-parity priority blocks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paritygames", description="Parity game solving suite")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default PG_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a PGSolver game")
    solve.add_argument("game", nargs="?", help="game file (standard input when omitted)")
    solve.add_argument("--solver", default=DEFAULT_SOLVER, help=f"one of {', '.join(SOLVERS)}")
    solve.add_argument("--verify", action="store_true", help="verify the solution, exit 3 on rejection")
    solve.add_argument("--stats", action="store_true", help="print solver counters")
    solve.add_argument("-o", "--output", help="solution file (standard output when omitted)")
    _add_pipeline_flags(solve)
    solve.set_defaults(func=cmd_solve)

    gen = sub.add_parser("gen", help="generate seeded random games")
    gen.add_argument("--class", dest="game_class", choices=hm.GAME_CLASSES, default="lowdeg")
    gen.add_argument("--n", type=int, required=True, help="vertex count")
    gen.add_argument("--min-deg", type=int, help="lowest out-degree (class default when omitted)")
    gen.add_argument("--max-deg", type=int, help="highest out-degree (class default when omitted)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--count", type=int, default=1, help="games to write, seeds counting up from --seed")
    gen.add_argument("--out-dir", help="directory for a batch of games")
    gen.add_argument("-o", "--output", help="game file (standard output when omitted)")
    gen.set_defaults(func=cmd_gen)

    bench = sub.add_parser("bench", help="benchmark solvers with PAR2 scoring")
    bench.add_argument("games", nargs="*", help="game files; random games are generated when omitted")
    bench.add_argument("--solver", action="append", help="solver to run, repeatable")
    bench.add_argument("--class", dest="game_class", action="append", choices=hm.GAME_CLASSES)
    bench.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 500, 1000])
    bench.add_argument("--count", type=int, default=5, help="games per class and size")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--timeout", type=float, default=hm.DEFAULT_TIMEOUT, help="seconds per run")
    bench.add_argument("--factor", type=float, default=hm.PAR_FACTOR, help="penalty factor for unfinished runs")
    bench.add_argument("--out-dir", default="results")
    bench.add_argument("--save-defaults", action="store_true", help="store timeout, factor and workers in .env")
    _add_pipeline_flags(bench)
    bench.set_defaults(func=cmd_bench)

    check = sub.add_parser("verify", help="check a solution file against a game")
    check.add_argument("game")
    check.add_argument("solution")
    check.set_defaults(func=cmd_verify)
    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    configure_logging(args.log_level)
    if getattr(args, "game_class", None) is None and args.command == "bench":
        args.game_class = list(hm.GAME_CLASSES)

    try:
        return args.func(args)
    except PGSolverParseError as e:
        logger.error("parse error: %s", e)
        return EXIT_PARSE
    except (UnknownSolverError, InfeasibleSpecError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except FileNotFoundError as e:
        logger.error("%s", e)
        return EXIT_USAGE


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
