"""
Naive reference searcher for exact FIN_1 (finite unions), d = 1.
No pruning and no shared code with witness_search: a block is a frozenset of
window indices and a colouring is any callable on frozensets.
"""

import itertools
from typing import Callable, Iterable, Optional

Colouring = Callable[[frozenset], int]


def nonempty_subsets(window: int) -> list[frozenset]:
    found = []
    for size in range(1, window + 1):
        for combo in itertools.combinations(range(window), size):
            found.append(frozenset(combo))
    return found


def ordered(blocks: Iterable[frozenset]) -> bool:
    blocks = list(blocks)
    return all(max(a) < min(b) for a, b in zip(blocks, blocks[1:]))


def finite_unions(blocks: tuple) -> list[frozenset]:
    unions = []
    for size in range(1, len(blocks) + 1):
        for chosen in itertools.combinations(blocks, size):
            unions.append(frozenset().union(*chosen))
    return unions


def _witnesses(colour: Colouring, window: int, m: int):
    for blocks in itertools.product(nonempty_subsets(window), repeat=m):
        if not ordered(blocks):
            continue
        colours = {colour(u) for u in finite_unions(blocks)}
        if len(colours) == 1:
            yield blocks


def brute_witnesses(colour: Colouring, window: int, m: int) -> list[tuple]:
    """Every m-block sequence in the window whose finite unions are monochromatic."""
    return list(_witnesses(colour, window, m))


def brute_witness_exists(colour: Colouring, window: int, m: int) -> bool:
    return next(_witnesses(colour, window, m), None) is not None


def brute_forced(window: int, m: int, r: int) -> bool:
    """True if every r-colouring of the nonempty subsets of the window admits a witness."""
    domain = nonempty_subsets(window)
    for assignment in itertools.product(range(r), repeat=len(domain)):
        table = dict(zip(domain, assignment))
        if not brute_witness_exists(table.__getitem__, window, m):
            return False
    return True


def brute_minimal_window(m: int, r: int, max_window: int) -> Optional[int]:
    for window in range(1, max_window + 1):
        if brute_forced(window, m, r):
            return window
    return None
