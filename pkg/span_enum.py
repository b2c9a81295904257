"""
Span enumeration for finlab.
Partial subsemigroups generated by finite block sequences:
- PM:    sums of eps_i T^{j_i}(p_{n_i}), signs +-1, levels < k, some level 0
- NT:    sums of (-T)^{j_i}(p_{n_i}), levels <= k (level k terms vanish)
- EXACT: unsigned sums of T^{j_i}(p_{n_i}) for the exact FIN_k version
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Iterator, NamedTuple, Optional

from errors import AmplitudeMismatch, BudgetExceeded, InvalidCombo, ParseError
from fin_vectors import (
    BlockSeq,
    FinVec,
    add,
    neg,
    neg_tetris_pow,
    support,
    tetris_pow,
)

log = logging.getLogger("finlab.span_enum")

DEFAULT_SPAN_BUDGET = 10 ** 7
DEFAULT_TUPLE_BUDGET = 10 ** 6


class SpanMode(Enum):
    """Which span a descriptor lives in; the value is the literal prefix."""
    PM = "PM"
    NT = "NT"
    EXACT = "EX"


class Term(NamedTuple):
    index: int
    sign: int
    level: int


@dataclass(frozen=True)
class Combo:
    """Span descriptor: the (block index, sign, level) terms of one span element."""
    terms: tuple[Term, ...]
    mode: SpanMode = SpanMode.PM

    @classmethod
    def of(cls, terms, mode: SpanMode = SpanMode.PM) -> "Combo":
        """Build from triples, or (index, level) pairs for the unsigned modes."""
        built = []
        for term in terms:
            if len(term) == 2:
                built.append(Term(term[0], 1, term[1]))
            else:
                built.append(Term(*term))
        return cls(tuple(built), mode)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(t.index for t in self.terms)

    @property
    def min_level(self) -> int:
        return min((t.level for t in self.terms), default=0)

    def negated(self) -> "Combo":
        """Flip every sign (PM only): the descriptor of the negated vector."""
        if self.mode is not SpanMode.PM:
            raise InvalidCombo(f"only PM descriptors can be negated, got {self.mode.value}")
        return Combo(tuple(Term(t.index, -t.sign, t.level) for t in self.terms), self.mode)

    def without_dropped(self, k: int) -> "Combo":
        """Drop NT terms at level k; they evaluate to zero."""
        return Combo(tuple(t for t in self.terms if t.level < k), self.mode)

    def __str__(self) -> str:
        return format_combo(self)


def validate_combo(combo: Combo, m: int, k: int) -> None:
    """Raise InvalidCombo unless combo is a valid descriptor over m blocks of amplitude k."""
    if not combo.terms:
        raise InvalidCombo("a combination needs at least one term")
    previous = -1
    for term in combo.terms:
        if term.index <= previous:
            raise InvalidCombo(f"block indices must strictly increase: {combo.indices}")
        if term.index >= m:
            raise InvalidCombo(f"block index {term.index} out of range for {m} blocks")
        if term.level < 0:
            raise InvalidCombo(f"negative level {term.level}")
        if combo.mode is SpanMode.PM:
            if term.sign not in (1, -1):
                raise InvalidCombo(f"sign must be +1 or -1, got {term.sign}")
            if term.level >= k:
                raise InvalidCombo(f"PM level {term.level} must be below k={k}")
        else:
            if term.sign != 1:
                raise InvalidCombo(f"{combo.mode.value} terms are unsigned, got sign {term.sign}")
            limit = k if combo.mode is SpanMode.NT else k - 1
            if term.level > limit:
                raise InvalidCombo(f"{combo.mode.value} level {term.level} exceeds {limit}")
        previous = term.index
    if combo.min_level != 0:
        raise InvalidCombo("some term must have level 0")


def require_attaining(seq: BlockSeq) -> None:
    """Every block of a generating sequence must attain the sequence bound."""
    for position, block in enumerate(seq):
        if not block.attains(seq.k):
            raise AmplitudeMismatch(
                f"block {position} ({block}) does not attain the sequence bound {seq.k}"
            )


def term_value(block: FinVec, term: Term, mode: SpanMode) -> FinVec:
    if mode is SpanMode.NT:
        return neg_tetris_pow(block, term.level)
    value = tetris_pow(block, term.level)
    return neg(value) if term.sign < 0 else value


def combine(seq: BlockSeq, combo: Combo) -> FinVec:
    """Evaluate a descriptor over seq; vanishing NT terms are skipped."""
    require_attaining(seq)
    validate_combo(combo, len(seq), seq.k)
    parts = [term_value(seq[t.index], t, combo.mode) for t in combo.terms]
    total = reduce(add, (p for p in parts if not p.is_zero))
    return total.retag(seq.k)


def _match_block(part: FinVec, block: FinVec, mode: SpanMode, k: int) -> Optional[tuple[int, int]]:
    for level in range(k):
        image = tetris_pow(block, level)
        if image.is_zero:
            break
        if mode is SpanMode.NT:
            if part == neg_tetris_pow(block, level):
                return 1, level
            continue
        if part == image:
            return 1, level
        if mode is SpanMode.PM and part == neg(image):
            return -1, level
    return None


def decompose(q: FinVec, seq: BlockSeq, mode: SpanMode = SpanMode.PM) -> Optional[Combo]:
    """
    Recover the unique descriptor of q over seq, or None if q is not in the span.

    Block supports are disjoint, so q restricted to each block's support
    must be one of the block's tetris images (or vanish there).
    """
    require_attaining(seq)
    k = seq.k
    if q.amplitude > k:
        return None
    remaining = q.as_dict()
    terms = []
    for index, block in enumerate(seq):
        part = {n: remaining.pop(n) for n in support(block) if n in remaining}
        if not part:
            continue
        match = _match_block(FinVec.of(part, k), block, mode, k)
        if match is None:
            return None
        terms.append(Term(index, *match))
    if remaining or not terms:
        return None
    combo = Combo(tuple(terms), mode)
    if combo.min_level != 0:
        return None
    return combo


def _term_choices(k: int, mode: SpanMode, include_dropped: bool) -> list[tuple[int, int]]:
    if mode is SpanMode.PM:
        return [(sign, level) for sign in (-1, 1) for level in range(k)]
    top = k + 1 if (mode is SpanMode.NT and include_dropped) else k
    return [(1, level) for level in range(top)]


def iter_combos(m: int, k: int, mode: SpanMode = SpanMode.PM,
                include_dropped: bool = True) -> Iterator[Combo]:
    """All valid descriptors over m blocks, by index subset then per-term (sign, level)."""
    choices = _term_choices(k, mode, include_dropped)
    for size in range(1, m + 1):
        for indices in itertools.combinations(range(m), size):
            for picks in itertools.product(choices, repeat=size):
                if min(level for _, level in picks) != 0:
                    continue
                yield Combo(
                    tuple(Term(i, sign, level) for i, (sign, level) in zip(indices, picks)),
                    mode,
                )


def span_size(m: int, k: int, mode: SpanMode = SpanMode.PM) -> int:
    """Number of distinct span elements of a length-m block sequence of amplitude k."""
    if mode is SpanMode.PM:
        return sum(math.comb(m, s) * ((2 * k) ** s - (2 * k - 2) ** s) for s in range(1, m + 1))
    return sum(math.comb(m, s) * (k ** s - (k - 1) ** s) for s in range(1, m + 1))


def enum_span(seq: BlockSeq, mode: SpanMode = SpanMode.PM,
              budget: int = DEFAULT_SPAN_BUDGET) -> list[FinVec]:
    """All span elements of seq, deduplicated and in canonical order."""
    m, k = len(seq), seq.k
    if m == 0:
        return []
    require_attaining(seq)
    expected = span_size(m, k, mode)
    if expected > budget:
        log.warning(f"Refusing span enumeration of size {expected} (budget {budget})")
        raise BudgetExceeded(
            f"span of {m} blocks at k={k} has {expected} elements, budget is {budget}",
            limit=budget, needed=expected,
        )

    # per block, per (sign, level): the term's entries, concatenated in block order
    table = []
    for block in seq:
        values = {}
        for sign, level in _term_choices(k, mode, include_dropped=False):
            value = term_value(block, Term(0, sign, level), mode)
            values[(sign, level)] = value.entries
        table.append(values)

    found = set()
    for combo in iter_combos(m, k, mode, include_dropped=False):
        entries = tuple(itertools.chain.from_iterable(
            table[t.index][(t.sign, t.level)] for t in combo.terms
        ))
        found.add(FinVec(entries, k))
    return sorted(found)


def enum_span_tuples(seq: BlockSeq, d: int, mode: SpanMode = SpanMode.PM,
                     span_budget: int = DEFAULT_SPAN_BUDGET,
                     budget: int = DEFAULT_TUPLE_BUDGET) -> list[BlockSeq]:
    """All length-d block sequences whose blocks lie in the span, in canonical order."""
    if d < 1:
        raise ValueError(f"tuple length must be positive, got {d}")
    elements = enum_span(seq, mode, span_budget)
    found: list[BlockSeq] = []

    def extend(prefix: list[FinVec], start: int) -> None:
        if len(prefix) == d:
            if len(found) >= budget:
                raise BudgetExceeded(
                    f"more than {budget} span tuples of length {d}", limit=budget, needed=budget + 1
                )
            found.append(BlockSeq(tuple(prefix)))
            return
        floor = prefix[-1].max_support if prefix else -1
        for position in range(start, len(elements)):
            element = elements[position]
            if element.min_support > floor:
                prefix.append(element)
                extend(prefix, position + 1)
                prefix.pop()

    extend([], 0)
    return sorted(found)


def is_block_subsequence(q_seq: BlockSeq, seq: BlockSeq,
                         mode: SpanMode = SpanMode.PM) -> tuple[bool, list[Combo]]:
    """Q <= P: every block of Q decomposes over P. Returns the witnesses found."""
    witnesses = []
    for block in q_seq:
        combo = decompose(block, seq, mode)
        if combo is None:
            return False, witnesses
        witnesses.append(combo)
    return True, witnesses


def is_nt_subsequence(q_seq: BlockSeq, seq: BlockSeq) -> tuple[bool, list[Combo]]:
    """Q <=_(-T) P."""
    return is_block_subsequence(q_seq, seq, SpanMode.NT)


# ---------------------------------------------------------------------------
# Literals: PM|0:+:0,1:-:1
# ---------------------------------------------------------------------------

def format_combo(combo: Combo) -> str:
    body = ",".join(
        f"{t.index}:{'+' if t.sign > 0 else '-'}:{t.level}" for t in combo.terms
    )
    return f"{combo.mode.value}|{body}"


def parse_combo(text: str) -> Combo:
    prefix, sep, body = text.strip().partition("|")
    if not sep:
        raise ParseError(f"combination literal needs a mode prefix: '{text.strip()}'")
    try:
        mode = SpanMode(prefix.strip().upper())
    except ValueError:
        raise ParseError(f"unknown span mode '{prefix.strip()}'")
    terms = []
    for item in body.split(","):
        parts = [p.strip() for p in item.split(":")]
        try:
            if len(parts) == 3:
                sign = {"+": 1, "+1": 1, "1": 1, "-": -1, "-1": -1}[parts[1]]
                terms.append(Term(int(parts[0]), sign, int(parts[2])))
            elif len(parts) == 2 and mode is not SpanMode.PM:
                terms.append(Term(int(parts[0]), 1, int(parts[1])))
            else:
                raise ParseError(f"bad term '{item.strip()}'")
        except (KeyError, ValueError):
            raise ParseError(f"bad term '{item.strip()}'")
    return Combo(tuple(terms), mode)
