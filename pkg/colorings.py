"""
Colourings for finlab.
Rule-based, tabulated and seeded-hash colourings of FinVec (arity 1) or of
d-tuples given as block sequences.

Rule colourings of a d-tuple colour the sum of its blocks; hash colourings
hash the canonical literal of the whole tuple. A d-tuple may also arrive as a
plain tuple of vectors, some of them zero (images under psi).
"""

import hashlib
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional, Union

from errors import ColoringDomainError, LengthMismatch, ParseError, UnknownRule
from fin_vectors import (
    BlockSeq,
    FinVec,
    format_seq,
    format_vector,
    parse_seq,
    support,
    union,
)

log = logging.getLogger("finlab.colorings")

Item = Union[FinVec, BlockSeq, tuple[FinVec, ...]]

BUILTIN_RULES = {
    "const:<i>": "every input gets colour i",
    "sign_at_min": "0 if the value at min support is positive, 1 if negative",
    "supp_parity:<r>": "support size mod r",
    "maxelem:<r>": "largest support index mod r",
    "hash:<seed>:<r>": "seeded SHA-256 of the canonical literal, mod r",
    "hash:<r>": "as above, seeded from the run configuration",
    "@<file>": "table file of 'literal -> colour' lines",
}


class Coloring(ABC):
    """A total, deterministic map from FinVec (arity 1) or d-tuples to colours 0..colors-1."""

    def __init__(self, arity: int = 1, colors: int = 2):
        if arity < 1:
            raise ValueError(f"arity must be positive, got {arity}")
        if colors < 1:
            raise ValueError(f"colour count must be positive, got {colors}")
        self.arity = arity
        self.colors = colors

    @property
    @abstractmethod
    def description(self) -> str:
        """Canonical rule text, echoed in reports."""

    @abstractmethod
    def _color(self, item: Item) -> int:
        ...

    def color(self, item: Item) -> int:
        if self.arity == 1:
            if not isinstance(item, FinVec):
                if len(item) != 1:
                    raise LengthMismatch(f"expected a single vector, got {len(item)} blocks")
                item = item[0]
        else:
            if isinstance(item, FinVec) or len(item) != self.arity:
                raise LengthMismatch(f"expected a {self.arity}-tuple")
        return self._color(item)

    def __call__(self, item: Item) -> int:
        return self.color(item)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.description}>"


def _flatten(item: Item) -> FinVec:
    return item if isinstance(item, FinVec) else union(item)


def _literal(item: Item) -> str:
    return format_vector(item) if isinstance(item, FinVec) else format_seq(item)


class ConstColoring(Coloring):
    def __init__(self, value: int, arity: int = 1, colors: Optional[int] = None):
        super().__init__(arity, colors if colors is not None else value + 1)
        if not 0 <= value < self.colors:
            raise ValueError(f"constant colour {value} outside 0..{self.colors - 1}")
        self.value = value

    @property
    def description(self) -> str:
        return f"const:{self.value}"

    def _color(self, item: Item) -> int:
        return self.value


class SignAtMinColoring(Coloring):
    def __init__(self, arity: int = 1):
        super().__init__(arity, 2)

    @property
    def description(self) -> str:
        return "sign_at_min"

    def _color(self, item: Item) -> int:
        v = _flatten(item)
        if v.is_zero:
            return 0
        return 0 if v.entries[0][1] > 0 else 1


class SuppParityColoring(Coloring):
    @property
    def description(self) -> str:
        return f"supp_parity:{self.colors}"

    def _color(self, item: Item) -> int:
        return len(support(_flatten(item))) % self.colors


class MaxElemColoring(Coloring):
    @property
    def description(self) -> str:
        return f"maxelem:{self.colors}"

    def _color(self, item: Item) -> int:
        v = _flatten(item)
        return v.max_support % self.colors if not v.is_zero else 0


class HashColoring(Coloring):
    """Stable across runs and platforms: SHA-256 of '<seed>|<literal>'."""

    def __init__(self, seed: int, colors: int, arity: int = 1):
        super().__init__(arity, colors)
        self.seed = seed

    @property
    def description(self) -> str:
        return f"hash:{self.seed}:{self.colors}"

    def _color(self, item: Item) -> int:
        digest = hashlib.sha256(f"{self.seed}|{_literal(item)}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.colors


class TableColoring(Coloring):
    """Explicit table keyed by FinVec (arity 1) or BlockSeq; optional default colour."""

    def __init__(self, table: dict, arity: int = 1, colors: Optional[int] = None,
                 default: Optional[int] = None, source: str = "table"):
        used = list(table.values()) + ([default] if default is not None else [])
        super().__init__(arity, colors if colors is not None else max(used, default=0) + 1)
        self.table = table
        self.default = default
        self.source = source

    @property
    def description(self) -> str:
        return self.source

    def _color(self, item: Item) -> int:
        found = self.table.get(item)
        if found is not None:
            return found
        if self.default is None:
            raise ColoringDomainError(f"'{_literal(item)}' is not in {self.source}")
        return self.default


def _int_param(text: str, rule: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"bad parameter '{text}' for rule {rule}")


def load_table_file(path: Path, arity: Optional[int] = None,
                    colors: Optional[int] = None) -> TableColoring:
    """
    Read a colouring table: one 'literal -> colour' per line, '#' comments,
    and an optional 'default -> colour' line.
    """
    table: dict = {}
    default = None
    detected = arity
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (IOError, OSError) as e:
        raise ParseError(f"cannot read colouring table {path}: {e}")
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        literal, sep, value = line.rpartition("->")
        if not sep:
            raise ParseError(f"{path}:{number}: expected 'literal -> colour'")
        colour = _int_param(value.strip(), "table")
        if colour < 0:
            raise ParseError(f"{path}:{number}: negative colour")
        if literal.strip() == "default":
            default = colour
            continue
        seq = parse_seq(literal)
        if detected is None:
            detected = max(len(seq), 1)
        if detected == 1:
            if len(seq) != 1:
                raise ParseError(f"{path}:{number}: expected a single vector")
            table[seq[0]] = colour
        else:
            if len(seq) != detected:
                raise ParseError(f"{path}:{number}: expected a {detected}-tuple")
            table[seq] = colour
    log.debug(f"Loaded {len(table)} table entries from {path}")
    return TableColoring(table, detected or 1, colors, default, source=f"@{path}")


def parse_coloring(rule: str, arity: Optional[int] = None, colors: Optional[int] = None,
                   seed: Optional[int] = None) -> Coloring:
    """
    Build a colouring from a catalogue rule or '@file'; 'hash:<r>' takes the run seed.
    Without an arity, tables take theirs from the first entry and rules default to 1.
    """
    rule = rule.strip()
    if rule.startswith("@"):
        return load_table_file(Path(rule[1:]), arity, colors)
    if arity is None:
        arity = 1
    name, _, rest = rule.partition(":")
    params = rest.split(":") if rest else []
    if name == "const" and len(params) == 1:
        return ConstColoring(_int_param(params[0], name), arity, colors)
    if name == "sign_at_min" and not params:
        return SignAtMinColoring(arity)
    if name == "supp_parity" and len(params) == 1:
        return SuppParityColoring(arity, _int_param(params[0], name))
    if name == "maxelem" and len(params) == 1:
        return MaxElemColoring(arity, _int_param(params[0], name))
    if name == "hash" and len(params) == 2:
        return HashColoring(_int_param(params[0], name), _int_param(params[1], name), arity)
    if name == "hash" and len(params) == 1 and seed is not None:
        return HashColoring(seed, _int_param(params[0], name), arity)
    raise UnknownRule(f"unknown colouring rule '{rule}'")


def builtin_colorings() -> dict[str, str]:
    """The rule catalogue: rule pattern -> description."""
    return dict(BUILTIN_RULES)
