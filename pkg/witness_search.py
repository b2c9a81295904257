"""
Witness search for finlab.
Finite Gowers-type experiments: find a block sequence P inside a support
window whose span tuples are all (approximately or exactly) one colour, and
scan every colouring of a small domain for the least forcing window.

Approximate mode covers a tuple Q when some Q' with c(Q') = i lies within
distance 1 of Q; the support-confined neighbourhood also keeps supp q'_n
inside supp q_n, the windowed one allows any window vector.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Iterator, Optional, Union

from colorings import Coloring, TableColoring
from errors import AmplitudeMismatch, BudgetExceeded, LengthMismatch
from fin_vectors import (
    BlockSeq,
    FinVec,
    format_seq,
    format_vector,
    is_block_ordered,
    parse_seq,
    tetris_seq,
)
from span_enum import (
    DEFAULT_SPAN_BUDGET,
    DEFAULT_TUPLE_BUDGET,
    SpanMode,
    enum_span,
    enum_span_tuples,
)

log = logging.getLogger("finlab.witness_search")

DEFAULT_CANDIDATE_BUDGET = 10 ** 6
DEFAULT_SCAN_BUDGET = 2 ** 20
SCAN_BATCH = 64


class SearchMode(Enum):
    APPROX = "approx"
    EXACT = "exact"


class Neighborhood(Enum):
    SUPPORT = "support"
    WINDOWED = "windowed"


class SearchStatus(Enum):
    WITNESS = "witness"
    EXHAUSTED = "exhausted"
    BUDGET = "budget"


@dataclass(frozen=True)
class SearchParams:
    """Parameters of one finite experiment. ``candidate_budget`` caps the DFS nodes examined."""
    k: int = 1
    d: int = 1
    r: int = 2
    window: int = 4
    m: int = 2
    mode: SearchMode = SearchMode.APPROX
    neighborhood: Neighborhood = Neighborhood.SUPPORT
    span_budget: int = DEFAULT_SPAN_BUDGET
    tuple_budget: int = DEFAULT_TUPLE_BUDGET
    candidate_budget: int = DEFAULT_CANDIDATE_BUDGET

    def __post_init__(self):
        for name in ("k", "d", "r", "window", "m", "span_budget", "tuple_budget", "candidate_budget"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"search parameter {name} must be a positive integer, got {value!r}")

    @property
    def span_mode(self) -> SpanMode:
        return SpanMode.EXACT if self.mode is SearchMode.EXACT else SpanMode.PM


@dataclass
class WitnessCheck:
    """Outcome of check_witness: a colour, or the first tuple no colour covers."""
    color: Optional[int]
    failure: Optional[BlockSeq] = None
    tuples_checked: int = 0

    @property
    def ok(self) -> bool:
        return self.failure is None


@dataclass
class SearchOutcome:
    status: SearchStatus
    witness: Optional[BlockSeq] = None
    color: Optional[int] = None
    candidates_examined: int = 0
    tuples_checked: int = 0
    cursor: Optional[str] = None


# ---------------------------------------------------------------------------
# Candidate blocks and neighbourhoods
# ---------------------------------------------------------------------------

def _value_range(k: int, mode: SearchMode) -> range:
    return range(0, k + 1) if mode is SearchMode.EXACT else range(-k, k + 1)


def candidate_count(params: SearchParams) -> int:
    """Number of window vectors that attain k: (2k+1)^W - (2k-1)^W, or (k+1)^W - k^W exact."""
    if params.mode is SearchMode.EXACT:
        return (params.k + 1) ** params.window - params.k ** params.window
    return (2 * params.k + 1) ** params.window - (2 * params.k - 1) ** params.window


def _window_vectors(params: SearchParams) -> list[FinVec]:
    values = _value_range(params.k, params.mode)
    found = []
    for row in itertools.product(values, repeat=params.window):
        entries = tuple((n, x) for n, x in enumerate(row) if x)
        if any(abs(x) == params.k for _, x in entries):
            found.append(FinVec(entries, params.k))
    return sorted(found)


def candidate_blocks(params: SearchParams, within: Optional[BlockSeq] = None) -> list[FinVec]:
    """
    Window vectors attaining k, in canonical order. With ``within`` the
    candidates are the span elements of that sequence that fit the window.
    """
    if within is not None:
        if within.k != params.k:
            raise AmplitudeMismatch(f"host sequence has k={within.k}, search has k={params.k}")
        elements = enum_span(within, params.span_mode, params.span_budget)
        return [v for v in elements if v.max_support < params.window and v.attains(params.k)]
    needed = candidate_count(params)
    if needed > params.span_budget:
        log.warning(f"Refusing {needed} candidate blocks (budget {params.span_budget})")
        raise BudgetExceeded(
            f"window {params.window} at k={params.k} has {needed} candidate blocks, "
            f"budget is {params.span_budget}",
            limit=params.span_budget, needed=needed,
        )
    return _window_vectors(params)


@lru_cache(maxsize=1 << 16)
def _block_neighbors(block: FinVec, k: int, window: int, windowed: bool) -> tuple[FinVec, ...]:
    values = block.as_dict()
    coordinates = range(window) if windowed else sorted(values)
    options = []
    for n in coordinates:
        x = values.get(n, 0)
        options.append(range(max(-k, x - 1), min(k, x + 1) + 1))
    found = []
    for row in itertools.product(*options):
        entries = tuple((n, x) for n, x in zip(coordinates, row) if x)
        if any(abs(x) == k for _, x in entries):
            found.append(FinVec(entries, k))
    return tuple(found)


def neighbors(q_seq: BlockSeq, params: SearchParams) -> Iterator[Union[FinVec, BlockSeq]]:
    """All colouring inputs within distance 1 of q_seq under the configured neighbourhood."""
    windowed = params.neighborhood is Neighborhood.WINDOWED
    options = [_block_neighbors(b, params.k, params.window, windowed) for b in q_seq]
    for row in itertools.product(*options):
        if params.d == 1:
            yield row[0]
        elif is_block_ordered(row):
            yield BlockSeq(row)


def _reachable_colors(q_seq: BlockSeq, coloring: Coloring, params: SearchParams,
                      wanted: set[int]) -> set[int]:
    found: set[int] = set()
    for item in neighbors(q_seq, params):
        colour = coloring.color(item)
        if colour in wanted:
            found.add(colour)
            if found == wanted:
                break
    return found


def _item(q_seq: BlockSeq, d: int) -> Union[FinVec, BlockSeq]:
    return q_seq[0] if d == 1 else q_seq


# ---------------------------------------------------------------------------
# check_witness
# ---------------------------------------------------------------------------

def check_witness(seq: BlockSeq, coloring: Coloring, params: SearchParams) -> WitnessCheck:
    """Check every span tuple of seq against one common colour; stop at the first failure."""
    if seq.k > params.k:
        raise AmplitudeMismatch(f"sequence amplitude {seq.k} exceeds k={params.k}")
    if len(seq) and seq[-1].max_support >= params.window:
        raise LengthMismatch(f"sequence '{format_seq(seq)}' does not fit window {params.window}")
    if params.mode is SearchMode.EXACT and any(x < 0 for b in seq for _, x in b.entries):
        raise AmplitudeMismatch("exact mode takes unsigned blocks")
    seq = seq.retag(params.k)
    tuples = enum_span_tuples(seq, params.d, params.span_mode,
                              params.span_budget, params.tuple_budget)

    candidates: Optional[set[int]] = None
    if params.mode is SearchMode.APPROX:
        candidates = set(range(coloring.colors))
    checked = 0
    for q_seq in tuples:
        checked += 1
        if params.mode is SearchMode.EXACT:
            colour = coloring.color(_item(q_seq, params.d))
            if candidates is None:
                candidates = {colour}
            elif colour not in candidates:
                return WitnessCheck(None, q_seq, checked)
        else:
            candidates &= _reachable_colors(q_seq, coloring, params, candidates)
            if not candidates:
                return WitnessCheck(None, q_seq, checked)
    return WitnessCheck(min(candidates) if candidates else 0, None, checked)


@dataclass
class LayeredCheck:
    """Per level j = 1..k: the colour of T^(k-j)(P), or its failure tuple."""
    colors: dict[int, int] = field(default_factory=dict)
    failures: dict[int, BlockSeq] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_layered_witness(seq: BlockSeq, colorings_by_level: dict[int, Coloring],
                          params: SearchParams) -> LayeredCheck:
    """For every j = 1..k check T^(k-j)(seq) against the level-j colouring."""
    k = params.k
    result = LayeredCheck()
    for j in range(1, k + 1):
        coloring = colorings_by_level.get(j)
        if coloring is None:
            raise ValueError(f"no colouring given for level {j}")
        level_seq = tetris_seq(seq.retag(k), k - j)
        check = check_witness(level_seq, coloring, replace(params, k=j))
        if check.ok:
            result.colors[j] = check.color
        else:
            result.failures[j] = check.failure
    return result


# ---------------------------------------------------------------------------
# find_witness
# ---------------------------------------------------------------------------

BlockPath = tuple[FinVec, ...]
SortKey = tuple[tuple[tuple[int, int], ...], BlockPath]


def _flat(path: BlockPath) -> tuple[tuple[int, int], ...]:
    return tuple(itertools.chain.from_iterable(b.entries for b in path))


def witness_key(path: Union[BlockSeq, BlockPath]) -> SortKey:
    """Witness order: the flattened entry list, ties broken by the blocks themselves."""
    blocks = tuple(path)
    return _flat(blocks), blocks


def _sorts_after(path: BlockPath, bound: Optional[SortKey], m: int) -> bool:
    """True if no length-m extension of path sorts before bound."""
    if bound is None:
        return False
    flat = _flat(path)
    if flat != bound[0]:
        return flat > bound[0]
    # an equal flat list only grows from here
    return len(path) < m or path >= bound[1]


class _Stop(Exception):
    pass


@dataclass
class _SubtreeRun:
    found: Optional[tuple[BlockPath, int]] = None
    nodes: int = 0
    tuples: int = 0
    last: Optional[BlockPath] = None
    stopped: bool = False


def _explore(first: int, blocks: list[FinVec], coloring: Coloring, params: SearchParams,
             limit: int, resume: Optional[BlockPath], bound: Optional[SortKey],
             least: bool = True) -> _SubtreeRun:
    """
    DFS below blocks[first], visiting at most ``limit`` nodes. Prefixes that
    cannot beat the best witness known so far are skipped without being
    counted. With ``least`` unset the first witness ends the run.
    """
    run = _SubtreeRun()

    def best() -> Optional[SortKey]:
        return witness_key(run.found[0]) if run.found is not None else bound

    def visit(prefix: list[FinVec], position: int) -> bool:
        path = tuple(prefix)
        if _sorts_after(path, best(), params.m):
            return False
        ancestor = resume is not None and len(path) < len(resume) and path == resume[:len(path)]
        if resume is not None and not ancestor and path < resume:
            return False
        if not ancestor:
            if run.nodes >= limit:
                run.stopped = True
                raise _Stop
            run.nodes += 1
            run.last = path
            check = check_witness(BlockSeq(path), coloring, params)
            run.tuples += check.tuples_checked
            if not check.ok:
                return False
            if len(path) == params.m:
                run.found = (path, check.color)
                return not least
        floor = path[-1].max_support
        if params.window - 1 - floor < params.m - len(path):
            return False
        for following in range(position + 1, len(blocks)):
            block = blocks[following]
            if block.min_support <= floor:
                continue
            prefix.append(block)
            done = visit(prefix, following)
            prefix.pop()
            if done:
                return True
        return False

    try:
        visit([blocks[first]], first)
    except _Stop:
        pass
    return run


def format_cursor(last: Optional[BlockPath], best: Optional[BlockPath] = None) -> str:
    """'<last examined path>', plus '|<best witness so far>' once one is known."""
    text = format_seq(last) if last else ""
    if best is not None:
        text += f"|{format_seq(best)}"
    return text


def parse_cursor(cursor: str, k: int) -> tuple[Optional[BlockPath], Optional[BlockPath]]:
    path_text, _, best_text = cursor.partition("|")
    resume = parse_seq(path_text, k).blocks if path_text.strip() else None
    best = parse_seq(best_text, k).blocks if best_text.strip() else None
    return resume, best


def _search(coloring: Coloring, params: SearchParams, blocks: list[FinVec],
            cursor: Optional[str] = None, workers: int = 1, least: bool = True) -> SearchOutcome:
    resume, carried = parse_cursor(cursor, params.k) if cursor else (None, None)
    firsts = [i for i, b in enumerate(blocks) if resume is None or b >= resume[0]]
    budget = params.candidate_budget
    width = max(workers, 1)
    nodes = tuples = 0
    last = resume
    found: Optional[tuple[BlockPath, int]] = None
    if carried is not None:
        check = check_witness(BlockSeq(carried), coloring, params)
        if check.ok and len(carried) == params.m:
            found = (carried, check.color)
        else:
            log.warning(f"Ignoring cursor witness '{format_seq(carried)}': not a witness here")

    def bound() -> Optional[SortKey]:
        return witness_key(found[0]) if found is not None else None

    def run_at(index: int, limit: int, key: Optional[SortKey]) -> _SubtreeRun:
        return _explore(index, blocks, coloring, params, limit, resume, key, least)

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for start in range(0, len(firsts), width):
            wave = firsts[start:start + width]
            if _sorts_after((blocks[wave[0]],), bound(), params.m):
                break
            limit = budget - nodes
            key = bound()
            if pool is not None:
                runs = list(pool.map(lambda i: run_at(i, limit, key), wave))
            else:
                runs = [run_at(i, limit, key) for i in wave]
            finished = False
            for index, run in zip(wave, runs):
                # first blocks come in canonical order, so the rest sort after the bound too
                if _sorts_after((blocks[index],), bound(), params.m):
                    finished = True
                    break
                remaining = budget - nodes
                if run.stopped or run.nodes > remaining or bound() != key:
                    run = run_at(index, remaining, bound())
                nodes += run.nodes
                tuples += run.tuples
                last = run.last or last
                if run.found is not None:
                    found = run.found
                    log.debug(f"Witness {format_seq(found[0])} after {nodes} candidates")
                    if not least:
                        finished = True
                        break
                if run.stopped:
                    cursor_text = format_cursor(last, found[0] if found is not None else None)
                    log.info(f"Search stopped after {nodes} candidates, cursor '{cursor_text}'")
                    outcome = SearchOutcome(SearchStatus.BUDGET, None, None, nodes, tuples, cursor_text)
                    raise BudgetExceeded(
                        f"candidate budget {budget} exhausted; resume with --resume '{cursor_text}'",
                        limit=budget, needed=nodes, cursor=cursor_text, partial=outcome,
                    )
            if finished:
                break
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    if found is None:
        return SearchOutcome(SearchStatus.EXHAUSTED, None, None, nodes, tuples)
    return SearchOutcome(SearchStatus.WITNESS, BlockSeq(found[0]), found[1], nodes, tuples)


def find_witness(coloring: Coloring, params: SearchParams, within: Optional[BlockSeq] = None,
                 cursor: Optional[str] = None, workers: int = 1) -> SearchOutcome:
    """
    The least witness of length m, ordered by flattened entry list (ties by
    blocks). The DFS walks paths block by block in canonical order; prefixes
    that fail check_witness are pruned, since every span tuple of a prefix is
    a span tuple of its extensions, and so are prefixes that cannot beat the
    best witness found so far.
    """
    blocks = candidate_blocks(params, within)
    log.info(f"Searching {len(blocks)} candidate blocks (k={params.k}, d={params.d}, "
             f"W={params.window}, m={params.m}, {params.mode.value}, workers={workers})")
    return _search(coloring, params, blocks, cursor, workers)


# ---------------------------------------------------------------------------
# scan_colorings
# ---------------------------------------------------------------------------

@dataclass
class WindowVerdict:
    window: int
    domain_size: int
    colorings_checked: int
    forced: bool
    extremal: Optional[TableColoring] = None


@dataclass
class ScanReport:
    params: SearchParams
    verdicts: list[WindowVerdict] = field(default_factory=list)

    @property
    def minimal_window(self) -> Optional[int]:
        for verdict in self.verdicts:
            if verdict.forced:
                return verdict.window
        return None


def _scan_domain(params: SearchParams, blocks: list[FinVec]) -> list[Union[FinVec, BlockSeq]]:
    if params.d == 1:
        return list(blocks)
    return sorted(
        BlockSeq(row) for row in itertools.combinations(blocks, params.d) if is_block_ordered(row)
    )


def relabelled_colorings(size: int, colors: int) -> Iterator[tuple[int, ...]]:
    """Colour assignments up to renaming colours: each new colour is the next unused one."""
    assignment = [0] * size

    def extend(position: int, used: int):
        if position == size:
            yield tuple(assignment)
            return
        for colour in range(min(used + 1, colors)):
            assignment[position] = colour
            yield from extend(position + 1, max(used, colour + 1))

    if size == 0:
        yield ()
        return
    yield from extend(0, 0)


def relabelled_count(size: int, colors: int) -> int:
    """Number of assignments relabelled_colorings yields (sum of Stirling numbers)."""
    row = [1] + [0] * colors
    for _ in range(size):
        row = [0] + [row[j - 1] + j * row[j] for j in range(1, colors + 1)]
    return sum(row) if size else 1


def scan_colorings(params: SearchParams, max_window: int, workers: int = 1,
                   scan_budget: int = DEFAULT_SCAN_BUDGET,
                   allow_approx: bool = False) -> ScanReport:
    """
    For n = 1..max_window: does every r-colouring of the window-n domain admit
    a witness? Stops at the first forcing window.
    """
    if params.mode is SearchMode.APPROX and not allow_approx:
        raise BudgetExceeded("approximate scans need an explicit budget override", limit=0, needed=1)
    report = ScanReport(params)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for n in range(1, max_window + 1):
            windowed = replace(params, window=n)
            blocks = candidate_blocks(windowed)
            domain = _scan_domain(windowed, blocks)
            needed = relabelled_count(len(domain), params.r)
            if needed > scan_budget:
                log.warning(f"Refusing scan of {needed} colourings at window {n} (budget {scan_budget})")
                raise BudgetExceeded(
                    f"window {n} has {needed} colourings up to relabelling, budget is {scan_budget}",
                    limit=scan_budget, needed=needed, partial=report,
                )

            def admits_witness(assignment: tuple[int, ...]) -> bool:
                table = TableColoring(dict(zip(domain, assignment)), params.d, params.r)
                return _search(table, windowed, blocks, least=False).status is SearchStatus.WITNESS

            verdict = WindowVerdict(n, len(domain), 0, True)
            stream = relabelled_colorings(len(domain), params.r)
            while verdict.forced:
                batch = list(itertools.islice(stream, SCAN_BATCH * max(workers, 1)))
                if not batch:
                    break
                results = pool.map(admits_witness, batch) if pool is not None else map(admits_witness, batch)
                for assignment, admitted in zip(batch, results):
                    verdict.colorings_checked += 1
                    if not admitted:
                        verdict.forced = False
                        verdict.extremal = TableColoring(dict(zip(domain, assignment)), params.d, params.r)
                        break
            log.info(f"Window {n}: {'forced' if verdict.forced else 'not forced'} "
                     f"after {verdict.colorings_checked} colourings")
            report.verdicts.append(verdict)
            if verdict.forced:
                break
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    return report


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _params_lines(params: SearchParams) -> list[str]:
    return [
        f"k={params.k}",
        f"d={params.d}",
        f"r={params.r}",
        f"window={params.window}",
        f"m={params.m}",
        f"mode={params.mode.value}",
        f"neighborhood={params.neighborhood.value}",
    ]


def format_search_report(params: SearchParams, coloring: Coloring, outcome: SearchOutcome,
                         within: Optional[BlockSeq] = None) -> str:
    lines = ["# finlab search report"] + _params_lines(params)
    lines.append(f"coloring={coloring.description}")
    if within is not None:
        lines.append(f"within={format_seq(within)}")
    lines.append(f"verdict={outcome.status.value}")
    if outcome.status is SearchStatus.WITNESS:
        lines.append(f"witness={format_seq(outcome.witness)}")
        lines.append(f"color={outcome.color}")
    if outcome.status is SearchStatus.BUDGET:
        lines.append(f"cursor={outcome.cursor}")
    lines.append(f"candidates_examined={outcome.candidates_examined}")
    lines.append(f"tuples_checked={outcome.tuples_checked}")
    return "\n".join(lines) + "\n"


def _format_extremal(table: TableColoring) -> str:
    parts = []
    for item, colour in table.table.items():
        literal = format_seq(item) if isinstance(item, BlockSeq) else format_vector(item)
        parts.append(f"{literal}->{colour}")
    return " | ".join(parts)


def format_scan_report(report: ScanReport) -> str:
    lines = ["# finlab scan report"] + [
        line for line in _params_lines(report.params) if not line.startswith("window=")
    ]
    for verdict in report.verdicts:
        state = "forced" if verdict.forced else "not-forced"
        lines.append(f"n={verdict.window} domain={verdict.domain_size} "
                     f"colorings={verdict.colorings_checked} verdict={state}")
        if verdict.extremal is not None:
            lines.append(f"  extremal: {_format_extremal(verdict.extremal)}")
    minimal = report.minimal_window
    lines.append(f"minimal_window={minimal if minimal is not None else 'none'}")
    return "\n".join(lines) + "\n"
