"""
Vector and block-sequence algebra for finlab.
Finitely supported integer vectors of bounded amplitude (FIN_±k), block
sequences, the l-infinity metric and the tetris family of maps.

Text literals:
- vector: comma-separated ``index:value`` pairs sorted by index, ``{}`` or
  the empty string for the zero vector (e.g. ``0:2,2:-1``)
- block sequence: vector literals joined by ``;``
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union

from errors import (
    AmplitudeMismatch,
    BlockOrderViolation,
    DegenerateBlock,
    LengthMismatch,
    ParseError,
)

log = logging.getLogger("finlab.fin_vectors")

ZERO_LITERAL = "{}"


@dataclass(frozen=True, order=True)
class FinVec:
    """
    A finitely supported integer vector with amplitude bound ``k``.

    Equality, hashing and the canonical order only look at ``entries``;
    ``k`` is carried along as the space the vector is considered in.
    The zero vector is representable but is never a legal block.
    """
    entries: tuple[tuple[int, int], ...] = ()
    k: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"amplitude bound must be positive, got {self.k}")
        object.__setattr__(self, "entries", tuple(tuple(e) for e in self.entries))
        previous = -1
        for index, value in self.entries:
            if index <= previous:
                raise ValueError(f"entries must be strictly ascending by index: {self.entries}")
            if value == 0:
                raise ValueError(f"zero value stored at index {index}")
            if abs(value) > self.k:
                raise AmplitudeMismatch(
                    f"value {value} at index {index} exceeds amplitude bound {self.k}"
                )
            previous = index

    @classmethod
    def of(cls, values: Union[Mapping[int, int], Iterable[tuple[int, int]]],
           k: Optional[int] = None) -> "FinVec":
        """Build a vector from a mapping or pairs; zeros are dropped, k defaults to the amplitude."""
        pairs = values.items() if isinstance(values, Mapping) else values
        entries = tuple(sorted((int(n), int(v)) for n, v in pairs if v != 0))
        if k is None:
            k = max((abs(v) for _, v in entries), default=1)
        return cls(entries, k)

    @classmethod
    def zero(cls, k: int = 1) -> "FinVec":
        return cls((), k)

    @property
    def is_zero(self) -> bool:
        return not self.entries

    @property
    def amplitude(self) -> int:
        """Largest absolute value (0 for the zero vector)."""
        return max((abs(v) for _, v in self.entries), default=0)

    def attains(self, k: Optional[int] = None) -> bool:
        """True if some value has magnitude k (strict FIN_±k membership)."""
        bound = self.k if k is None else k
        return any(abs(v) == bound for _, v in self.entries)

    @property
    def min_support(self) -> int:
        if not self.entries:
            raise DegenerateBlock("the zero vector has no support")
        return self.entries[0][0]

    @property
    def max_support(self) -> int:
        if not self.entries:
            raise DegenerateBlock("the zero vector has no support")
        return self.entries[-1][0]

    def value_at(self, index: int) -> int:
        for n, v in self.entries:
            if n == index:
                return v
            if n > index:
                break
        return 0

    def as_dict(self) -> dict[int, int]:
        return dict(self.entries)

    def retag(self, k: int) -> "FinVec":
        """Same vector considered in FIN_±k."""
        if k == self.k:
            return self
        return FinVec(self.entries, k)

    def __str__(self) -> str:
        return format_vector(self)


@dataclass(frozen=True, order=True)
class BlockSeq:
    """
    A finite block sequence: nonzero blocks with strictly ordered supports.
    All blocks are re-tagged to one bound, the largest among them.
    """
    blocks: tuple[FinVec, ...] = ()

    def __post_init__(self):
        blocks = tuple(self.blocks)
        for position, block in enumerate(blocks):
            if block.is_zero:
                raise DegenerateBlock(f"block {position} is the zero vector")
        for position in range(1, len(blocks)):
            if not blocks[position - 1].max_support < blocks[position].min_support:
                raise BlockOrderViolation(
                    f"blocks {position - 1} and {position} are not support-ordered"
                )
        bound = max((b.k for b in blocks), default=1)
        object.__setattr__(self, "blocks", tuple(b.retag(bound) for b in blocks))

    @property
    def k(self) -> int:
        return self.blocks[0].k if self.blocks else 1

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[FinVec]:
        return iter(self.blocks)

    def __getitem__(self, position: int) -> FinVec:
        return self.blocks[position]

    def retag(self, k: int) -> "BlockSeq":
        return BlockSeq(tuple(b.retag(k) for b in self.blocks))

    def __str__(self) -> str:
        return format_seq(self)


# ---------------------------------------------------------------------------
# Vector operations
# ---------------------------------------------------------------------------

def support(v: FinVec) -> tuple[int, ...]:
    """Indices with nonzero value, ascending."""
    return tuple(n for n, _ in v.entries)


def dist(u: FinVec, v: FinVec) -> int:
    """l-infinity distance between two integer vectors (bounds may differ)."""
    a = u.as_dict()
    b = v.as_dict()
    return max((abs(a.get(n, 0) - b.get(n, 0)) for n in a.keys() | b.keys()), default=0)


def add(u: FinVec, v: FinVec) -> FinVec:
    """Sum of u < v. Only defined for strictly support-ordered arguments."""
    if u.is_zero or v.is_zero:
        raise BlockOrderViolation("sum is only defined for nonzero support-ordered vectors")
    if not u.max_support < v.min_support:
        raise BlockOrderViolation(
            f"max supp {u.max_support} is not below min supp {v.min_support}"
        )
    return FinVec(u.entries + v.entries, max(u.k, v.k))


def neg(v: FinVec) -> FinVec:
    return FinVec(tuple((n, -x) for n, x in v.entries), v.k)


def tetris(v: FinVec) -> FinVec:
    """Move every value one step toward zero; the bound drops by one (never below 1)."""
    entries = tuple((n, x - 1 if x > 0 else x + 1) for n, x in v.entries if abs(x) > 1)
    return FinVec(entries, max(v.k - 1, 1))


def neg_tetris(v: FinVec) -> FinVec:
    return neg(tetris(v))


def tetris_pow(v: FinVec, j: int) -> FinVec:
    """j-fold tetris; j = 0 is the identity."""
    if j < 0:
        raise ValueError(f"tetris exponent must be non-negative, got {j}")
    entries = tuple(
        (n, x - j if x > 0 else x + j) for n, x in v.entries if abs(x) > j
    )
    return FinVec(entries, max(v.k - j, 1))


def neg_tetris_pow(v: FinVec, j: int) -> FinVec:
    """(-T)^j: equals T^j for even j and -T^j for odd j."""
    result = tetris_pow(v, j)
    return neg(result) if j % 2 else result


def weak_tetris(v: FinVec) -> FinVec:
    """S: zero the values of magnitude 1, keep the rest."""
    return FinVec(tuple((n, x) for n, x in v.entries if abs(x) != 1), v.k)


def _halve(value: int) -> int:
    # even values halve exactly, odd values round toward zero
    return value // 2 if value > 0 else -((-value) // 2)


def phi(m: int, v: FinVec) -> FinVec:
    """Phi_m: FIN_±2m -> FIN_±m, halving toward zero."""
    if m < 1:
        raise ValueError(f"phi index must be positive, got {m}")
    if v.amplitude > 2 * m:
        raise AmplitudeMismatch(f"phi_{m} accepts amplitude at most {2 * m}, got {v.amplitude}")
    entries = tuple((n, _halve(x)) for n, x in v.entries if abs(x) > 1)
    return FinVec(entries, m)


def psi(k: int, v: FinVec) -> FinVec:
    """Psi = Phi_k o Phi_2k: FIN_±4k -> FIN_±k."""
    if v.amplitude > 4 * k:
        raise AmplitudeMismatch(f"psi_{k} accepts amplitude at most {4 * k}, got {v.amplitude}")
    return phi(k, phi(2 * k, v))


def union(blocks: Iterable[FinVec], k: Optional[int] = None) -> FinVec:
    """Coordinate-wise sum of support-disjoint vectors (the sum of a tree node's blocks)."""
    merged: dict[int, int] = {}
    bound = 1
    for block in blocks:
        bound = max(bound, block.k)
        for n, x in block.entries:
            merged[n] = merged.get(n, 0) + x
    return FinVec.of(merged, k if k is not None else bound)


# ---------------------------------------------------------------------------
# Sequence operations
# ---------------------------------------------------------------------------

def seq_map(op: Callable[[FinVec], FinVec], seq: BlockSeq) -> BlockSeq:
    """Apply op to every block; a vanishing block is an error."""
    mapped = []
    for position, block in enumerate(seq):
        image = op(block)
        if image.is_zero:
            raise DegenerateBlock(f"block {position} ({format_vector(block)}) vanished")
        mapped.append(image)
    return BlockSeq(tuple(mapped))


def seq_dist(p: BlockSeq, q: BlockSeq) -> int:
    if len(p) != len(q):
        raise LengthMismatch(f"sequence lengths differ: {len(p)} vs {len(q)}")
    return max((dist(a, b) for a, b in zip(p, q)), default=0)


def restrict(seq: BlockSeq, n: int) -> BlockSeq:
    """r_n: the first n blocks."""
    if n < 0 or n > len(seq):
        raise LengthMismatch(f"cannot restrict a sequence of length {len(seq)} to {n}")
    return BlockSeq(seq.blocks[:n])


def tetris_seq(seq: BlockSeq, j: int) -> BlockSeq:
    """T^(j) applied blockwise."""
    return seq_map(lambda v: tetris_pow(v, j), seq)


def is_block_ordered(blocks: Iterable[FinVec]) -> bool:
    last = -1
    for block in blocks:
        if block.is_zero or block.min_support <= last:
            return False
        last = block.max_support
    return True


# ---------------------------------------------------------------------------
# Text literals
# ---------------------------------------------------------------------------

def format_vector(v: FinVec) -> str:
    if v.is_zero:
        return ZERO_LITERAL
    return ",".join(f"{n}:{x}" for n, x in v.entries)


def format_seq(seq: Union[BlockSeq, Iterable[FinVec]]) -> str:
    return ";".join(format_vector(b) for b in seq)


def _parse_entries(text: str) -> list[tuple[int, int]]:
    body = text.strip()
    if body in ("", ZERO_LITERAL):
        return []
    entries = []
    for item in body.split(","):
        parts = item.strip().split(":")
        if len(parts) != 2:
            raise ParseError(f"expected index:value, got '{item.strip()}'")
        try:
            index, value = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer entry '{item.strip()}'")
        if index < 0:
            raise ParseError(f"negative index in '{item.strip()}'")
        if value == 0:
            raise ParseError(f"zero value stored in '{item.strip()}'")
        if entries and index <= entries[-1][0]:
            raise ParseError(f"indices must be strictly ascending in '{text.strip()}'")
        entries.append((index, value))
    return entries


def parse_vector(text: str, k: Optional[int] = None) -> FinVec:
    """Parse a vector literal; k defaults to the literal's amplitude."""
    entries = _parse_entries(text)
    bound = k if k is not None else max((abs(v) for _, v in entries), default=1)
    try:
        return FinVec(tuple(entries), bound)
    except AmplitudeMismatch as e:
        raise ParseError(str(e))


def parse_seq(text: str, k: Optional[int] = None) -> BlockSeq:
    """Parse a block-sequence literal; all blocks share the largest amplitude unless k is given."""
    body = text.strip()
    if not body:
        return BlockSeq(())
    parsed = [_parse_entries(part) for part in body.split(";")]
    bound = k if k is not None else max(
        (abs(v) for entries in parsed for _, v in entries), default=1
    )
    try:
        return BlockSeq(tuple(FinVec(tuple(entries), bound) for entries in parsed))
    except (AmplitudeMismatch, BlockOrderViolation, DegenerateBlock) as e:
        raise ParseError(f"{e.name}: {e}")
