"""
Subcommand implementations for the finlab CLI.
Each command takes the parsed arguments and the resolved configuration and
returns the text to print plus an exit code; errors propagate to main.
"""

import logging
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from colorings import parse_coloring
from config_handler import ConfigHandler
from errors import BudgetExceeded, ParseError
from fin_vectors import (
    BlockSeq,
    FinVec,
    add,
    dist,
    format_seq,
    format_vector,
    neg,
    parse_seq,
    parse_vector,
    phi,
    psi,
    tetris,
    weak_tetris,
)
from selftest import format_results, run_selftest
from span_enum import SpanMode, combine, enum_span, enum_span_tuples, format_combo, parse_combo
from tree_rewrite import format_certificate, format_tree, rewrite_into_tree, synth_tree
from witness_search import (
    Neighborhood,
    SearchMode,
    SearchParams,
    SearchStatus,
    find_witness,
    format_scan_report,
    format_search_report,
    scan_colorings,
)

log = logging.getLogger("finlab.commands")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BUDGET = 2
EXIT_USAGE = 3

SPAN_MODES = {"pm": SpanMode.PM, "nt": SpanMode.NT, "exact": SpanMode.EXACT}


@dataclass
class CommandResult:
    text: str
    exit_code: int = EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

_CALL = re.compile(r"^\s*([A-Za-z]+)(\d*)\s*\((.*)\)\s*$", re.S)
_UNARY = {"T", "S", "neg", "phi", "psi"}
_MAX_NESTING = 1

Value = Union[FinVec, int]


def _split_pair(body: str) -> tuple[str, str]:
    """
    Split two arguments at the first top-level comma that touches whitespace,
    follows a closing parenthesis or precedes a function name. Plain commas
    belong to vector literals.
    """
    depth = 0
    for i, char in enumerate(body):
        if char == "(":
            depth += 1
        elif char == ")":
            depth -= 1
        elif char == "," and depth == 0:
            before = body[i - 1] if i else ""
            after = body[i + 1] if i + 1 < len(body) else ""
            if before.isspace() or after.isspace() or before == ")" or after.isalpha():
                return body[:i], body[i + 1:]
    raise ParseError(f"expected two arguments separated by ' , ' in '{body.strip()}'")


def _vector_arg(text: str, nesting: int) -> FinVec:
    value = evaluate(text, nesting + 1)
    if not isinstance(value, FinVec):
        raise ParseError(f"'{text.strip()}' is not a vector")
    return value


def evaluate(expression: str, nesting: int = 0) -> Value:
    """Evaluate one eval expression (function calls nested at most one level)."""
    match = _CALL.match(expression)
    if match is None:
        return parse_vector(expression)
    if nesting > _MAX_NESTING:
        raise ParseError(f"calls nest deeper than {_MAX_NESTING} level: '{expression.strip()}'")
    name, index, body = match.group(1), match.group(2), match.group(3)

    if name in ("phi", "psi"):
        if not index:
            raise ParseError(f"{name} needs an index, e.g. {name}1(...)")
        v = _vector_arg(body, nesting)
        return phi(int(index), v) if name == "phi" else psi(int(index), v)
    if index:
        raise ParseError(f"unknown function '{name}{index}'")
    if name in _UNARY:
        v = _vector_arg(body, nesting)
        if name == "T":
            return tetris(v)
        if name == "S":
            return weak_tetris(v)
        return neg(v)
    if name in ("add", "dist"):
        left, right = _split_pair(body)
        u, v = _vector_arg(left, nesting), _vector_arg(right, nesting)
        return add(u, v) if name == "add" else dist(u, v)
    if name == "combine":
        seq_text, sep, combo_text = body.rpartition(";")
        if not sep:
            raise ParseError("combine takes 'P ; combo'")
        return combine(parse_seq(seq_text), parse_combo(combo_text))
    raise ParseError(f"unknown function '{name}'")


def cmd_eval(args, handler: ConfigHandler) -> CommandResult:
    value = evaluate(args.expression)
    text = format_vector(value) if isinstance(value, FinVec) else str(value)
    return CommandResult(text + "\n")


# ---------------------------------------------------------------------------
# span
# ---------------------------------------------------------------------------

def cmd_span(args, handler: ConfigHandler) -> CommandResult:
    config = handler.config
    seq = parse_seq(args.sequence)
    mode = SPAN_MODES[args.mode]
    if args.tuples:
        items = enum_span_tuples(seq, args.tuples, mode, config.span_budget, config.tuple_budget)
        lines = [format_seq(t) for t in items]
    else:
        lines = [format_vector(v) for v in enum_span(seq, mode, config.span_budget)]
    lines.append(f"count={len(lines)}")
    return CommandResult("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# search / scan
# ---------------------------------------------------------------------------

def search_params(args, handler: ConfigHandler) -> SearchParams:
    config = handler.config
    return SearchParams(
        k=args.k,
        d=args.d,
        r=args.r,
        window=args.window,
        m=args.m,
        mode=SearchMode(args.mode),
        neighborhood=Neighborhood(args.neighborhood),
        span_budget=config.span_budget,
        tuple_budget=config.tuple_budget,
        candidate_budget=config.candidate_budget,
    )


def cmd_search(args, handler: ConfigHandler) -> CommandResult:
    config = handler.config
    params = search_params(args, handler)
    coloring = parse_coloring(args.coloring, params.d, seed=config.seed)
    within = parse_seq(args.within, params.k) if args.within else None
    try:
        outcome = find_witness(coloring, params, within=within, cursor=args.resume,
                               workers=config.threads)
    except BudgetExceeded as e:
        if e.partial is None:
            raise
        return CommandResult(format_search_report(params, coloring, e.partial, within), EXIT_BUDGET)
    code = EXIT_OK if outcome.status is SearchStatus.WITNESS else EXIT_FAILED
    return CommandResult(format_search_report(params, coloring, outcome, within), code)


def cmd_scan(args, handler: ConfigHandler) -> CommandResult:
    config = handler.config
    params = search_params(args, handler)
    report = scan_colorings(params, args.max_window, workers=config.threads,
                            scan_budget=config.scan_budget, allow_approx=args.allow_approx)
    return CommandResult(format_scan_report(report))


# ---------------------------------------------------------------------------
# rewrite-demo
# ---------------------------------------------------------------------------

def pick_subsequence(seq: BlockSeq, seed: int) -> BlockSeq:
    """A seeded choice among the PM block subsequences of length min(len(seq), 3)."""
    length = min(len(seq), 3)
    candidates = enum_span_tuples(seq, length, SpanMode.PM)
    return random.Random(seed).choice(candidates)


def cmd_rewrite_demo(args, handler: ConfigHandler) -> CommandResult:
    config = handler.config
    seq = parse_seq(args.P)
    q_seq = parse_seq(args.Q, seq.k) if args.Q else pick_subsequence(seq, config.seed)
    depth = args.depth or len(q_seq)
    tree, certificate = synth_tree(seq, depth, config.span_budget, config.node_budget)
    if args.dump:
        target = Path(args.dump)
        target.mkdir(parents=True, exist_ok=True)
        (target / "tree.txt").write_text(format_tree(tree), encoding="utf-8")
        (target / "certificate.txt").write_text(format_certificate(certificate), encoding="utf-8")
        log.info(f"Wrote tree and certificate to {target}")

    result = rewrite_into_tree(q_seq, seq, tree, certificate)
    lines = [
        f"P={format_seq(seq)}",
        f"Q={format_seq(q_seq)}",
        f"tree depth={tree.depth} nodes={len(tree)}",
    ]
    for step in result.steps:
        lines.append(
            f"step {step.position}: case={step.case} q={format_vector(step.original)} "
            f"q'={format_vector(step.rewritten)} dist={step.distance} "
            f"descriptor={format_combo(step.descriptor)} "
            f"supp_ok={'yes' if step.support_contained else 'no'}"
        )
    lines.append(f"Q'={format_seq(result.rewritten)}")
    bound_ok = result.max_distance <= 3 and all(s.support_contained for s in result.steps)
    lines.append(f"max_dist={result.max_distance} {'≤' if result.max_distance <= 3 else '>'} 3")
    return CommandResult("\n".join(lines) + "\n", EXIT_OK if bound_ok else EXIT_FAILED)


# ---------------------------------------------------------------------------
# selftest / config
# ---------------------------------------------------------------------------

def cmd_selftest(args, handler: ConfigHandler) -> CommandResult:
    results = run_selftest(handler.config.seed, quick=args.quick, only=args.suite)
    code = EXIT_OK if all(r.passed for r in results) else EXIT_FAILED
    return CommandResult(format_results(results), code)


def cmd_config(args, handler: ConfigHandler) -> CommandResult:
    text = handler.describe()
    if args.write:
        if not handler.save():
            return CommandResult(text + f"could not write {handler.config_file}\n", EXIT_FAILED)
        text += f"saved={handler.config_file}\n"
    return CommandResult(text)


def write_output(text: str, output_path: Optional[str]) -> None:
    """Print to stdout, or write to the configured output path."""
    if output_path:
        Path(output_path).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
