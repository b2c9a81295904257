#!/usr/bin/env python3
"""
finlab
Finite FIN_±k combinatorics: span enumeration, tree rewriting, amplitude
lifting and finite witness searches, from the command line.

Exit codes: 0 success/witness, 1 exhausted/violation/error, 2 budget, 3 usage.
"""

__version__ = "0.1.0"

import argparse
import sys
from pathlib import Path

# Ensure the project directory is in the path
project_dir = Path(__file__).parent.absolute()
if str(project_dir) not in sys.path:
    sys.path.insert(0, str(project_dir))

from commands import (  # noqa: E402
    EXIT_BUDGET,
    EXIT_FAILED,
    EXIT_USAGE,
    cmd_config,
    cmd_eval,
    cmd_rewrite_demo,
    cmd_scan,
    cmd_search,
    cmd_selftest,
    cmd_span,
    write_output,
)
from config_handler import ConfigHandler  # noqa: E402
from errors import BudgetExceeded, FinLabError, ParseError, UnknownRule  # noqa: E402
from logger import setup_logging  # noqa: E402


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 3."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--seed", type=int, help="run seed (default 20190101)")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--debug", action="store_true", help="debug logging on stderr")
    common.add_argument("--quiet", action="store_true", help="only warnings on stderr")
    common.add_argument("--log-to-file", action="store_true",
                        help="also log to <config dir>/logs")
    return common


def _search_options(parser: argparse.ArgumentParser, mode: str) -> None:
    parser.add_argument("--k", type=int, default=1, help="amplitude")
    parser.add_argument("--d", type=int, default=1, help="tuple arity")
    parser.add_argument("--r", type=int, default=2, help="number of colours")
    parser.add_argument("--window", type=int, default=4, help="support window W")
    parser.add_argument("--m", type=int, default=2, help="witness length")
    parser.add_argument("--mode", choices=["approx", "exact"], default=mode)
    parser.add_argument("--neighborhood", choices=["support", "windowed"], default="support")


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = UsageParser(prog="finlab", description="Finite FIN_±k combinatorics toolkit")
    parser.add_argument("--version", action="version", version=f"finlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate an expression")
    p.add_argument("expression")
    p.set_defaults(func=cmd_eval, budget_key=None)

    p = sub.add_parser("span", parents=[common], help="enumerate a span")
    p.add_argument("sequence", help="block sequence literal, e.g. '0:2;1:2'")
    p.add_argument("--mode", choices=["pm", "nt", "exact"], default="pm")
    p.add_argument("--tuples", type=int, default=0, help="list d-tuples instead of vectors")
    p.add_argument("--budget", type=int, help="span size cap")
    p.set_defaults(func=cmd_span, budget_key="span_budget")

    p = sub.add_parser("search", parents=[common], help="find a witness for a colouring")
    _search_options(p, "approx")
    p.add_argument("--coloring", required=True, help="catalogue rule or @table-file")
    p.add_argument("--within", help="restrict candidates to the span of this sequence")
    p.add_argument("--budget", type=int, help="candidate (DFS node) cap")
    p.add_argument("--resume", help="cursor printed by a budget-stopped search")
    p.set_defaults(func=cmd_search, budget_key="candidate_budget")

    p = sub.add_parser("scan", parents=[common], help="scan all colourings of small windows")
    _search_options(p, "exact")
    p.add_argument("--max-window", type=int, default=4)
    p.add_argument("--allow-approx", action="store_true", help="permit approximate-mode scans")
    p.add_argument("--budget", type=int, help="colouring count cap")
    p.set_defaults(func=cmd_scan, budget_key="scan_budget")

    p = sub.add_parser("rewrite-demo", parents=[common], help="rewrite Q into a synthesised tree")
    p.add_argument("--P", required=True, help="block sequence literal")
    p.add_argument("--Q", help="block subsequence literal (seeded choice if omitted)")
    p.add_argument("--depth", type=int, help="tree depth (default len(Q))")
    p.add_argument("--dump", help="directory for tree.txt and certificate.txt")
    p.set_defaults(func=cmd_rewrite_demo, budget_key=None)

    p = sub.add_parser("selftest", parents=[common], help="run the invariant suites")
    p.add_argument("--quick", action="store_true", help="fewer samples, smaller scans")
    p.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    p.set_defaults(func=cmd_selftest, budget_key=None)

    p = sub.add_parser("config", parents=[common], help="show the resolved configuration")
    p.add_argument("--write", action="store_true", help="save it to the config file")
    p.set_defaults(func=cmd_config, budget_key=None)
    return parser


def main(argv=None) -> int:
    """Main application entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    config = ConfigHandler(args.config)
    logger = setup_logging(config.config_dir if args.log_to_file else None,
                           debug=args.debug, quiet=args.quiet)

    overrides = {"seed": args.seed, "threads": args.threads, "output_path": args.output}
    if args.budget_key is not None:
        overrides[args.budget_key] = getattr(args, "budget", None)
    try:
        config.apply_overrides(**overrides)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger.debug(f"finlab {__version__}: {args.command}")
    try:
        result = args.func(args, config)
    except BudgetExceeded as e:
        print(f"error: {e.name}: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ParseError, UnknownRule) as e:
        print(f"error: {e.name}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FinLabError as e:
        print(f"error: {e.name}: {e}", file=sys.stderr)
        return EXIT_FAILED
    except ValueError as e:
        print(f"error: ValueError: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        write_output(result.text, config.config.output_path)
    except (IOError, OSError) as e:
        print(f"error: could not write output: {e}", file=sys.stderr)
        return EXIT_FAILED
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
