"""
Amplitude reduction for finlab.
Psi maps FIN_±4k onto FIN_±k; scaling by 4 is its canonical section. Block
sequences, span descriptors and colourings lift along it.
"""

import logging
from typing import Union

from colorings import Coloring
from errors import InvalidCombo, NotASubsequence
from fin_vectors import BlockSeq, FinVec, format_vector, psi, seq_map
from span_enum import Combo, SpanMode, Term, combine, decompose, validate_combo

log = logging.getLogger("finlab.psi_lift")

SCALE = 4


def scale4(v: FinVec) -> FinVec:
    """Multiply every value by 4; psi(k, scale4(v)) == v."""
    return FinVec(tuple((n, SCALE * x) for n, x in v.entries), SCALE * v.k)


def lift_block(seq: BlockSeq) -> BlockSeq:
    """Element-wise scale4; supports and block order are unchanged."""
    return BlockSeq(tuple(scale4(b) for b in seq))


def lift_combo(combo: Combo, k: int) -> Combo:
    """Same indices and signs, levels multiplied by 4."""
    if combo.mode is not SpanMode.PM:
        raise InvalidCombo(f"only PM descriptors lift, got {combo.mode.value}")
    validate_combo(combo, max(combo.indices, default=-1) + 1, k)
    return Combo(tuple(Term(t.index, t.sign, SCALE * t.level) for t in combo.terms), SpanMode.PM)


def psi_seq(k: int, seq: BlockSeq) -> BlockSeq:
    return seq_map(lambda v: psi(k, v), seq)


def lift_subsequence(q_seq: BlockSeq, seq: BlockSeq) -> BlockSeq:
    """
    Build Q~ <= P~ (P~ = lift_block(P)) with psi_seq(k, Q~) == Q, termwise
    through lift_combo.
    """
    k = seq.k
    lifted = lift_block(seq)
    blocks = []
    for position, q in enumerate(q_seq):
        combo = decompose(q, seq, SpanMode.PM)
        if combo is None:
            raise NotASubsequence(f"block {position} ({format_vector(q)}) is not in the span")
        blocks.append(combine(lifted, lift_combo(combo, k)))
    return BlockSeq(tuple(blocks))


class LiftedColoring(Coloring):
    """c~ := c o psi, colouring amplitude-4k inputs through their psi image."""

    def __init__(self, base: Coloring, k: int):
        super().__init__(arity=base.arity, colors=base.colors)
        self.base = base
        self.k = k

    @property
    def description(self) -> str:
        return f"lift({self.base.description})"

    def _color(self, item: Union[FinVec, BlockSeq, tuple[FinVec, ...]]) -> int:
        if isinstance(item, FinVec):
            return self.base.color(psi(self.k, item))
        images = tuple(psi(self.k, b) for b in item)
        if any(image.is_zero for image in images):
            # psi may annihilate a block; the base colouring sees the raw image tuple
            return self.base.color(images)
        return self.base.color(BlockSeq(images))


def pushforward_coloring(coloring: Coloring, k: int) -> LiftedColoring:
    return LiftedColoring(coloring, k)
