"""
Invariant suites for finlab, run by `finlab selftest`.
Every suite draws its randomness from a child seed derived from the run seed,
so a given seed always checks the same instances.
"""

import hashlib
import itertools
import logging
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from brute_oracle import brute_forced, brute_witness_exists
from colorings import HashColoring, MaxElemColoring, SuppParityColoring, TableColoring
from errors import BudgetExceeded, FinLabError
from fin_vectors import (
    BlockSeq,
    FinVec,
    add,
    dist,
    neg,
    phi,
    psi,
    support,
    tetris_pow,
    union,
    weak_tetris,
)
from psi_lift import lift_block, lift_subsequence, psi_seq, scale4
from span_enum import (
    SpanMode,
    combine,
    decompose,
    enum_span,
    enum_span_tuples,
    is_block_subsequence,
    iter_combos,
    span_size,
)
from tree_rewrite import (
    CertificateViolation,
    FiniteBlockTree,
    audit_s_closure,
    build_tree,
    rewrite_into_tree,
    s_close,
    synth_tree,
    verify_certificate,
)
from witness_search import (
    SearchMode,
    SearchParams,
    SearchStatus,
    candidate_blocks,
    find_witness,
    format_search_report,
    scan_colorings,
)

log = logging.getLogger("finlab.selftest")

DEFAULT_SAMPLES = 10_000
QUICK_SAMPLES = 500
MAX_REPORTED = 20


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    violations: list[str] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations

    def fail(self, message: str) -> None:
        if len(self.violations) < MAX_REPORTED:
            self.violations.append(message)
        elif len(self.violations) == MAX_REPORTED:
            self.violations.append("...")

    def expect(self, condition: bool, message: str) -> None:
        self.checked += 1
        if not condition:
            self.fail(message)


def child_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# Instance generators
# ---------------------------------------------------------------------------

def random_vector(rng: random.Random, k: int, start: int, width: int,
                  attain: bool = True, positive: bool = False) -> FinVec:
    low = 0 if positive else -k
    values = {n: rng.randint(low, k) for n in range(start, start + width)}
    if attain:
        n = rng.randrange(start, start + width)
        values[n] = k if positive or rng.random() < 0.5 else -k
    return FinVec.of(values, k)


def random_seq(rng: random.Random, m: int, k: int, max_width: int = 2,
               positive: bool = False) -> BlockSeq:
    blocks = []
    start = 0
    for _ in range(m):
        width = rng.randint(1, max_width)
        blocks.append(random_vector(rng, k, start, width, positive=positive))
        start += width + rng.randint(0, 1)
    return BlockSeq(tuple(blocks))


def all_vectors(k: int, window: int) -> list[FinVec]:
    return [
        FinVec(tuple((n, x) for n, x in enumerate(row) if x), k)
        for row in itertools.product(range(-k, k + 1), repeat=window)
    ]


def near_vectors(v: FinVec, k: int, window: int) -> list[FinVec]:
    """Every vector on the window within distance 1 of v (the zero vector included)."""
    values = v.as_dict()
    options = [range(max(-k, values.get(n, 0) - 1), min(k, values.get(n, 0) + 1) + 1)
               for n in range(window)]
    return [
        FinVec(tuple((n, x) for n, x in enumerate(row) if x), k)
        for row in itertools.product(*options)
    ]


def split(v: FinVec, cut: int) -> tuple[FinVec, FinVec]:
    return (FinVec(tuple(e for e in v.entries if e[0] < cut), v.k),
            FinVec(tuple(e for e in v.entries if e[0] >= cut), v.k))


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def _s_laws_single(result: SuiteResult, v: FinVec) -> None:
    image = weak_tetris(v)
    result.expect(dist(v, image) <= 1, f"dist(v, S(v)) > 1 for {v}")
    result.expect(weak_tetris(image) == image, f"S not idempotent on {v}")


def _s_laws_pair(result: SuiteResult, u: FinVec, v: FinVec) -> None:
    image = weak_tetris(u)
    result.expect(set(support(image)) <= set(support(v)), f"supp S({u}) not inside supp {v}")
    result.expect(dist(image, v) <= 2, f"dist(S({u}), {v}) > 2")


def suite_s_laws(rng: random.Random, samples: int) -> SuiteResult:
    result = SuiteResult("s_laws")
    for _ in range(samples):
        k = rng.randint(1, 4)
        window = rng.randint(1, 12)
        v = random_vector(rng, k, 0, window, attain=rng.random() < 0.8)
        _s_laws_single(result, v)
        u = FinVec.of({n: max(-k, min(k, v.value_at(n) + rng.randint(-1, 1)))
                       for n in range(window)}, k)
        _s_laws_pair(result, u, v)
    for k in (1, 2):
        for window in range(1, 5):
            for v in all_vectors(k, window):
                _s_laws_single(result, v)
                for u in near_vectors(v, k, window):
                    _s_laws_pair(result, u, v)
    return result


def _phi_laws(result: SuiteResult, m: int, w: FinVec, cut: int) -> None:
    result.expect(phi(m, neg(w)) == neg(phi(m, w)), f"phi_{m} does not commute with neg on {w}")
    u, v = split(w, cut)
    if u.is_zero or v.is_zero:
        return
    result.expect(phi(m, add(u, v)) == union((phi(m, u), phi(m, v))),
                  f"phi_{m} not additive on {u} + {v}")
    for j0, j1 in itertools.product(range(m + 1), repeat=2):
        if min(j0, j1) != 0:
            continue
        lhs = phi(m, union((tetris_pow(u, 2 * j0), tetris_pow(v, 2 * j1))))
        rhs = union((tetris_pow(phi(m, u), j0), tetris_pow(phi(m, v), j1)))
        result.expect(lhs == rhs, f"phi_{m} tetris law fails on {u}, {v}, j=({j0},{j1})")


def _psi_law(result: SuiteResult, k: int, w: FinVec, cut: int) -> None:
    u, v = split(w, cut)
    if u.is_zero or v.is_zero:
        return
    for j0, j1 in itertools.product(range(k + 1), repeat=2):
        if min(j0, j1) != 0:
            continue
        lhs = psi(k, union((tetris_pow(u, 4 * j0), tetris_pow(v, 4 * j1))))
        rhs = union((tetris_pow(psi(k, u), j0), tetris_pow(psi(k, v), j1)))
        result.expect(lhs == rhs, f"psi_{k} tetris law fails on {u}, {v}, j=({j0},{j1})")


def _contraction(result: SuiteResult, label: str, a: FinVec, b: FinVec,
                 image_a: FinVec, image_b: FinVec, factor: int) -> None:
    gap = dist(a, b)
    bound = -(-gap // factor)
    result.expect(dist(image_a, image_b) <= bound, f"{label} expands {a}, {b}")


def suite_homomorphisms(rng: random.Random, samples: int) -> SuiteResult:
    result = SuiteResult("homomorphisms")
    for _ in range(samples):
        m = rng.randint(1, 3)
        window = rng.randint(2, 8)
        w = random_vector(rng, 2 * m, 0, window, attain=False)
        _phi_laws(result, m, w, rng.randint(1, window - 1))
        other = FinVec.of({n: max(-2 * m, min(2 * m, w.value_at(n) + rng.randint(-2, 2)))
                           for n in range(window)}, 2 * m)
        _contraction(result, f"phi_{m}", w, other, phi(m, w), phi(m, other), 2)

        k = rng.randint(1, 3)
        w = random_vector(rng, 4 * k, 0, window, attain=False)
        _psi_law(result, k, w, rng.randint(1, window - 1))
        other = FinVec.of({n: max(-4 * k, min(4 * k, w.value_at(n) + rng.randint(-4, 4)))
                           for n in range(window)}, 4 * k)
        result.expect(dist(psi(k, w), psi(k, other)) <= 1, f"psi_{k} moves {w}, {other} apart")

    for window in range(1, 4):
        small = all_vectors(2, window)
        images = [phi(1, w) for w in small]
        for w in small:
            for cut in range(1, window):
                _phi_laws(result, 1, w, cut)
        for (a, image_a), (b, image_b) in itertools.product(zip(small, images), repeat=2):
            _contraction(result, "phi_1", a, b, image_a, image_b, 2)

        large = all_vectors(4, window)
        images = [psi(1, w) for w in large]
        for w in large:
            for cut in range(1, window):
                _psi_law(result, 1, w, cut)
        for (a, image_a), (b, image_b) in itertools.product(zip(large, images), repeat=2):
            if dist(a, b) <= 4:
                result.expect(dist(image_a, image_b) <= 1, f"psi_1 moves {a}, {b} apart")
    return result


def suite_span_integrity(rng: random.Random, samples: int) -> SuiteResult:
    result = SuiteResult("span_integrity")
    for mode in (SpanMode.PM, SpanMode.NT, SpanMode.EXACT):
        for k in range(1, 4):
            for m in range(1, 5):
                hosts = [
                    BlockSeq(tuple(FinVec(((i, k),), k) for i in range(m))),
                    random_seq(rng, m, k, positive=mode is SpanMode.EXACT),
                ]
                for seq in hosts:
                    for combo in iter_combos(m, k, mode):
                        expected = combo.without_dropped(k) if mode is SpanMode.NT else combo
                        found = decompose(combine(seq, combo), seq, mode)
                        result.expect(found == expected, f"{mode.value} round trip fails: {combo} over {seq}")
                    size = len(enum_span(seq, mode))
                    result.expect(size == span_size(m, k, mode),
                                  f"{mode.value} span of {seq} has {size} elements")
    return result


def suite_s_closure(rng: random.Random, samples: int, trees: int = 100) -> SuiteResult:
    result = SuiteResult("s_closure")
    for _ in range(trees):
        k = rng.randint(2, 3)
        depth = rng.randint(1, 3)

        def successors(node):
            floor = node[-1].max_support if node else -1
            count = rng.randint(2 if not node else 0, 8)
            return [random_vector(rng, k, floor + 1 + rng.randint(0, 1), rng.randint(1, 2))
                    for _ in range(count)]

        tree = build_tree(depth, successors)
        while tree.stem:
            tree = build_tree(depth, successors)
        closed, proj = s_close(tree)
        issues = audit_s_closure(tree, closed, proj)
        result.expect(not issues, "; ".join(issues[:3]))
    return result


def suite_rewriting(rng: random.Random, samples: int) -> SuiteResult:
    result = SuiteResult("rewriting")
    seq = BlockSeq(tuple(FinVec(((i, 2),), 2) for i in range(3)))
    tree, certificate = synth_tree(seq, 3)
    for length in range(1, 4):
        for q_seq in enum_span_tuples(seq, length, SpanMode.PM):
            try:
                rewritten = rewrite_into_tree(q_seq, seq, tree, certificate)
            except FinLabError as e:
                result.expect(False, f"rewriting {q_seq} failed: {e.name}: {e}")
                continue
            result.expect(rewritten.max_distance <= 3, f"{q_seq} moved by {rewritten.max_distance}")
            result.expect(all(s.support_contained for s in rewritten.steps),
                          f"support of {q_seq} not preserved")
            result.expect(tree.contains(rewritten.rewritten.blocks),
                          f"{rewritten.rewritten} is not a branch prefix")
    return result


def broken_example() -> tuple[FiniteBlockTree, object, CertificateViolation]:
    """
    Synthesised tree for ({0:2},{1:2}) at depth 2 with p_0 = {0:2} removed from the
    root successors (and its subtree dropped). Property (1) fails at the root.
    """
    seq = BlockSeq((FinVec(((0, 2),), 2), FinVec(((1, 2),), 2)))
    tree, certificate = synth_tree(seq, 2)
    removed = seq[0]
    succ = {}
    for node, children in tree.succ.items():
        if node and node[0] == removed:
            continue
        succ[node] = tuple(c for c in children if node or c != removed)
    expected = CertificateViolation("(1) member", 0, (), removed)
    return FiniteBlockTree(2, succ), certificate, expected


def suite_certificates(rng: random.Random, samples: int, sequences: int = 50) -> SuiteResult:
    result = SuiteResult("certificates")
    for _ in range(sequences):
        seq = random_seq(rng, rng.randint(1, 4), 2)
        tree, certificate = synth_tree(seq, min(len(seq), 2))
        report = verify_certificate(tree, certificate)
        result.expect(report.passed, f"certificate for {seq} rejected: "
                      + "; ".join(str(v) for v in report.violations[:3]))
    tree, certificate, expected = broken_example()
    report = verify_certificate(tree, certificate)
    result.expect(expected in report.violations, "broken tree was not rejected at the root")
    return result


def suite_lifting(rng: random.Random, samples: int) -> SuiteResult:
    result = SuiteResult("lifting")
    for k in (1, 2):
        for window in range(1, 4):
            for v in all_vectors(k, window):
                result.expect(psi(k, scale4(v)) == v, f"psi(scale4({v})) != {v}")
        for m in range(1, 4):
            for seq in (BlockSeq(tuple(FinVec(((i, k),), k) for i in range(m))), random_seq(rng, m, k)):
                lifted = lift_block(seq)
                for length in range(1, m + 1):
                    for q_seq in enum_span_tuples(seq, length, SpanMode.PM):
                        q_lift = lift_subsequence(q_seq, seq)
                        result.expect(psi_seq(k, q_lift) == q_seq, f"psi does not undo lifting of {q_seq}")
                        inside, _ = is_block_subsequence(q_lift, lifted)
                        result.expect(inside, f"lift of {q_seq} leaves the span of {lifted}")
    return result


def _support_table(table: TableColoring):
    lookup = {frozenset(support(v)): c for v, c in table.table.items()}
    return lookup.__getitem__


def suite_oracle(rng: random.Random, samples: int, colorings: int = 200,
                 max_window: int = 4) -> SuiteResult:
    result = SuiteResult("oracle")
    for _ in range(colorings):
        window = rng.randint(1, max_window)
        params = SearchParams(k=1, r=2, window=window, m=2, mode=SearchMode.EXACT)
        table = TableColoring({v: rng.randint(0, 1) for v in candidate_blocks(params)}, 1, 2)
        found = find_witness(table, params).status is SearchStatus.WITNESS
        expected = brute_witness_exists(_support_table(table), window, 2)
        result.expect(found == expected, f"search and oracle disagree at W={window}")
    params = SearchParams(k=1, r=2, window=1, m=2, mode=SearchMode.EXACT)
    report = scan_colorings(params, max_window)
    for verdict in report.verdicts:
        expected = brute_forced(verdict.window, 2, 2)
        result.expect(verdict.forced == expected, f"scan and oracle disagree at n={verdict.window}")
    if report.minimal_window is None:
        result.expect(not any(brute_forced(n, 2, 2) for n in range(1, max_window + 1)),
                      "oracle forces a window the scan did not")
    return result


def determinism_scenarios(seed: int) -> list[tuple[SearchParams, object]]:
    return [
        (SearchParams(k=1, r=2, window=4, m=2, mode=SearchMode.EXACT), SuppParityColoring(1, 2)),
        (SearchParams(k=1, r=2, window=5, m=3, mode=SearchMode.EXACT), MaxElemColoring(1, 2)),
        (SearchParams(k=1, r=2, window=3, m=2), HashColoring(seed, 2)),
        (SearchParams(k=1, r=2, window=4, m=3, mode=SearchMode.EXACT, candidate_budget=5),
         HashColoring(seed, 2)),
    ]


def _report_for(params: SearchParams, coloring, workers: int) -> str:
    try:
        outcome = find_witness(coloring, params, workers=workers)
    except BudgetExceeded as e:
        outcome = e.partial
    return format_search_report(params, coloring, outcome)


def suite_determinism(rng: random.Random, samples: int, seed: int = 0) -> SuiteResult:
    result = SuiteResult("determinism")
    for params, coloring in determinism_scenarios(seed):
        reports = {workers: _report_for(params, coloring, workers) for workers in (1, 4, 8)}
        result.expect(len(set(reports.values())) == 1,
                      f"reports differ across thread counts for {coloring.description}")
    return result


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "s_laws": suite_s_laws,
    "homomorphisms": suite_homomorphisms,
    "span_integrity": suite_span_integrity,
    "s_closure": suite_s_closure,
    "rewriting": suite_rewriting,
    "certificates": suite_certificates,
    "lifting": suite_lifting,
    "oracle": suite_oracle,
    "determinism": suite_determinism,
}


def run_selftest(seed: int, quick: bool = False,
                 only: Optional[list[str]] = None) -> list[SuiteResult]:
    """Run the named suites (all by default); quick mode samples less and scans smaller windows."""
    names = only or list(SUITES)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}")
    samples = QUICK_SAMPLES if quick else DEFAULT_SAMPLES
    results = []
    for name in names:
        rng = random.Random(child_seed(seed, name))
        started = time.perf_counter()
        if name == "oracle" and quick:
            result = suite_oracle(rng, samples, colorings=50, max_window=3)
        elif name == "determinism":
            result = suite_determinism(rng, samples, seed)
        else:
            result = SUITES[name](rng, samples)
        result.elapsed = time.perf_counter() - started
        log.info(f"Suite {name}: {result.checked} checks, {len(result.violations)} violation(s), "
                 f"{result.elapsed:.1f}s")
        results.append(result)
    return results


def format_results(results: list[SuiteResult]) -> str:
    """Deterministic summary (no timings)."""
    lines = []
    for result in results:
        state = "ok" if result.passed else "FAIL"
        lines.append(f"{result.name}: {state} checks={result.checked}")
        lines.extend(f"  {message}" for message in result.violations)
    failed = sum(1 for r in results if not r.passed)
    lines.append(f"suites={len(results)} failed={failed}")
    return "\n".join(lines) + "\n"
