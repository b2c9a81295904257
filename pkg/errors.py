"""
Error types for finlab.
Every failure a caller can act on has its own class; the CLI prints the
class name verbatim.
"""

from typing import Optional


class FinLabError(Exception):
    """Base class for all finlab errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


class BlockOrderViolation(FinLabError):
    """Two vectors are not strictly support-ordered (max supp u < min supp v)."""


class AmplitudeMismatch(FinLabError):
    """A value exceeds the amplitude an operation accepts."""


class LengthMismatch(FinLabError):
    """Sequence lengths disagree, or a prefix longer than the sequence was requested."""


class DegenerateBlock(FinLabError):
    """A block became (or is) the zero vector."""


class InvalidCombo(FinLabError):
    """A span descriptor violates its invariants against a host sequence."""


class BudgetExceeded(FinLabError):
    """An enumeration or search would exceed its configured budget."""

    def __init__(self, message: str, limit: int = 0, needed: int = 0,
                 cursor: Optional[str] = None, partial: Optional[object] = None):
        super().__init__(message)
        self.limit = limit
        self.needed = needed
        self.cursor = cursor
        # counters computed before the stop, e.g. a search outcome
        self.partial = partial


class Case1PreconditionFailed(FinLabError):
    """Case-1 normalisation needs a term with sign +1 and level 0."""


class EmptyTree(FinLabError):
    """A tree has no successors at its stem."""


class StemNotEmpty(FinLabError):
    """S-closure takes only trees that branch at the root."""


class NotASubsequence(FinLabError):
    """A block of Q does not lie in the span of P."""


class CertificateInsufficient(FinLabError):
    """The tree offers no successor close enough for the rewriting step."""


class DepthExceeded(FinLabError):
    """The sequence to rewrite is longer than the tree is deep."""


class UnknownRule(FinLabError):
    """A colouring rule name is not in the catalogue."""


class ColoringDomainError(FinLabError):
    """A table colouring was queried outside its table and has no default."""


class ParseError(FinLabError):
    """A text literal or expression could not be parsed."""
