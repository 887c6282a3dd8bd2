"""Command line entry point: ``python -m src.harness.cli <command> ...``.

Exit status is 0 on success, 2 for usage errors (bad flags, bad config,
invalid arguments) and 1 for runtime failures. Failures print one line to
stderr of the form::

    error: kind=<usage|runtime> type=<ExceptionName> message=<text>
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src.harness.charts import plot_curves
from src.harness.config import Settings, default_config, load_config, with_overrides
from src.harness.output import write_trace_csv
from src.harness.suites import (
    BASE_TASK,
    run_bounds_verify,
    run_safecond_suite,
    run_similarity_suite,
    run_suite,
)
from src.learning.learner import LearnerConfig, SafeCondition, run
from src.mdp.core import QTable
from src.mdp.errors import InvalidArgumentError, TTQLError
from src.mdp.generators import random_mdp
from src.mdp.oracle import solve_q_star
from src.mdp.rng import make_rng
from src.mdp.serialization import (
    load_mdp,
    load_qtable,
    looks_like_mdp_file,
    save_mdp,
    save_qtable,
)
from src.theory.bounds import envelope_from_trace

logger = logging.getLogger(__name__)

GATES = {
    "bellman": SafeCondition.BELLMAN_GATE,
    "always": SafeCondition.ALWAYS_TRANSFER,
    "never": SafeCondition.NEVER_TRANSFER,
    "distance": SafeCondition.DISTANCE_GATE,
}
SUITES = ("exp-similarity", "exp-safecond", "bounds-verify", "custom")


class UsageError(InvalidArgumentError):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_mdp_shape(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--states", type=int, default=50, help="number of states")
    parser.add_argument("--actions", type=int, default=50, help="number of actions")
    parser.add_argument("--gamma", type=float, default=0.9, help="discount factor")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ttql", description="Target transfer Q-learning experiments.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    generate = commands.add_parser("generate", help="write a random MDP file")
    _add_mdp_shape(generate)
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--out", required=True, help="MDP JSON path")

    solve = commands.add_parser("solve", help="solve Q* of an MDP file")
    solve.add_argument("mdp", help="MDP JSON path")
    solve.add_argument("--tol", type=float, default=None, help="sup-norm tolerance on Q*")
    solve.add_argument("--out", help="write Q* as a Q-table JSON file")

    learn = commands.add_parser("learn", help="run one TTQL trace")
    learn.add_argument("--mdp", help="MDP JSON path; a random MDP is generated when omitted")
    _add_mdp_shape(learn)
    learn.add_argument("--mdp-seed", type=int, default=0, help="seed of the generated MDP")
    learn.add_argument("--source", help="source task: MDP file (solved for Q*) or Q-table file")
    learn.add_argument("--gate", choices=sorted(GATES), default="bellman")
    learn.add_argument("--horizon", type=int, default=10_000)
    learn.add_argument("--seed", type=int, default=0)
    learn.add_argument("--check-period", type=int, default=1)
    learn.add_argument("--tol", type=float, default=None)
    learn.add_argument("--out", help="trace CSV path")

    suite = commands.add_parser("suite", help="run a named experiment suite")
    suite.add_argument("name", choices=SUITES)
    suite.add_argument("--config", help="key=value config file")
    suite.add_argument("--seeds", type=int)
    suite.add_argument("--horizon", type=int)
    suite.add_argument("--output-dir")

    bounds = commands.add_parser("bounds-verify", help="check the coefficient bounds on a grid")
    bounds.add_argument("--out", help="output directory")

    chart = commands.add_parser("chart", help="render CSV curves to an SVG line chart")
    chart.add_argument("csv", nargs="+")
    chart.add_argument("--out", required=True, help="SVG path")
    chart.add_argument("--title")
    return parser


def _series_label(path: Path) -> str:
    return path.parent.name if path.stem == "curve" else path.stem


def cmd_generate(args, settings: Settings) -> int:
    mdp = random_mdp(args.states, args.actions, args.gamma, make_rng(args.seed, "mdp", BASE_TASK))
    print(save_mdp(mdp, args.out))
    return 0


def cmd_solve(args, settings: Settings) -> int:
    mdp = load_mdp(args.mdp)
    report = solve_q_star(mdp, args.tol if args.tol is not None else settings.solver_tol)
    if args.out:
        save_qtable(report.q_star, args.out)
    print(
        json.dumps(
            {
                "iterations": report.iterations,
                "residual": report.residual,
                "guaranteed_mne": report.guaranteed_mne,
            }
        )
    )
    return 0


def _load_source(path: str, mdp_new, tol: float) -> QTable:
    if looks_like_mdp_file(path):
        source = load_mdp(path)
        if source.shape != mdp_new.shape:
            raise InvalidArgumentError(f"source MDP shape {source.shape} != new task {mdp_new.shape}")
        return solve_q_star(source, tol).q_star
    return load_qtable(path)


def cmd_learn(args, settings: Settings) -> int:
    tol = args.tol if args.tol is not None else settings.solver_tol
    if args.mdp:
        mdp = load_mdp(args.mdp)
    else:
        mdp = random_mdp(args.states, args.actions, args.gamma, make_rng(args.mdp_seed, "mdp", BASE_TASK))
    q_source = _load_source(args.source, mdp, tol) if args.source else None
    config = LearnerConfig(
        horizon=args.horizon,
        safe_condition=GATES[args.gate],
        safe_check_period=args.check_period,
    )
    q_star = solve_q_star(mdp, tol).q_star
    trace = run(mdp, q_source, config, q_star, make_rng(args.mdp_seed, "learn", args.seed))

    out = Path(args.out) if args.out else Path(settings.output_dir) / "learn" / f"trace_seed{args.seed:03d}.csv"
    write_trace_csv(trace, out)
    logger.info(
        f"final MNE {trace.final_mne:.4e}, envelope at delta=0.05 "
        f"{envelope_from_trace(trace, mdp.gamma):.4e}, transfers {int(trace.transfer_flag.sum())}"
    )
    print(out)
    return 0


def _bounds_status(rows) -> int:
    failures = sum(1 for r in rows if not (r.thm2_ok and r.thm3_ok))
    if failures:
        _report_error("runtime", "BoundViolation", f"{failures} grid points violate a bound")
        return 1
    return 0


def cmd_suite(args, settings: Settings) -> int:
    if args.config:
        config = load_config(args.config, settings, suite=args.name)
    else:
        config = default_config(args.name, settings)
    config = with_overrides(
        config, seeds=args.seeds, horizon=args.horizon, output_dir=args.output_dir
    )

    if config.suite == "bounds-verify":
        rows = run_bounds_verify(config.suite_dir())
        print(config.suite_dir())
        return _bounds_status(rows)

    runner = {
        "exp-similarity": run_similarity_suite,
        "exp-safecond": run_safecond_suite,
    }.get(config.suite, run_suite)
    result = runner(config, settings)
    print(result.suite_dir)
    return 0


def cmd_bounds_verify(args, settings: Settings) -> int:
    out = Path(args.out) if args.out else Path(settings.output_dir) / "bounds-verify"
    rows = run_bounds_verify(out)
    print(out / "bounds.csv")
    return _bounds_status(rows)


def cmd_chart(args, settings: Settings) -> int:
    paths = [Path(p) for p in args.csv]
    series = {}
    for path in paths:
        label = _series_label(path)
        while label in series:
            label += "'"
        series[label] = path
    print(plot_curves(series, args.out, title=args.title))
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "learn": cmd_learn,
    "suite": cmd_suite,
    "bounds-verify": cmd_bounds_verify,
    "chart": cmd_chart,
}


def _report_error(kind: str, type_name: str, message: str) -> None:
    flat = " ".join(str(message).split())
    print(f"error: kind={kind} type={type_name} message={flat}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        settings = Settings.from_env()
        logging.basicConfig(level=settings.log_level.upper())
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, settings)
    except ValueError as e:
        # InvalidArgumentError and pydantic ValidationError are ValueErrors
        logger.debug("usage error", exc_info=True)
        _report_error("usage", type(e).__name__, e)
        return 2
    except (TTQLError, OSError) as e:
        logger.error(f"command failed: {e}")
        logger.debug("traceback", exc_info=True)
        _report_error("runtime", type(e).__name__, e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
