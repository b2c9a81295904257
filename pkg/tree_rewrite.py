"""
Finite block trees for finlab.
S-closure of a tree with distance-1 projections, certificate chains and their
verifier, and the two-case rewriting of a block subsequence into a tree branch.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from errors import (
    BlockOrderViolation,
    Case1PreconditionFailed,
    CertificateInsufficient,
    DegenerateBlock,
    DepthExceeded,
    EmptyTree,
    InvalidCombo,
    BudgetExceeded,
    NotASubsequence,
    ParseError,
    StemNotEmpty,
)
from fin_vectors import (
    BlockSeq,
    FinVec,
    dist,
    format_seq,
    format_vector,
    neg,
    parse_seq,
    parse_vector,
    seq_dist,
    support,
    union,
    weak_tetris,
)
from span_enum import (
    DEFAULT_SPAN_BUDGET,
    Combo,
    SpanMode,
    Term,
    combine,
    decompose,
    enum_span,
    enum_span_tuples,
)

log = logging.getLogger("finlab.tree_rewrite")

DEFAULT_NODE_BUDGET = 10 ** 6

Node = tuple[FinVec, ...]


class FiniteBlockTree:
    """
    A downward closed tree of finite block sequences of bounded depth.

    ``succ`` maps every node of length < depth to its successor set U_t
    (canonically sorted). A node below depth with an empty successor set is
    a dead end; only the root is required to have successors.
    """

    def __init__(self, depth: int, succ: dict[Node, tuple[FinVec, ...]]):
        if depth < 1:
            raise ValueError(f"tree depth must be positive, got {depth}")
        self.depth = depth
        self.succ = succ
        self.nodes: frozenset[Node] = frozenset(
            [()] + [t + (p,) for t, children in succ.items() for p in children]
        )
        self._validate()

    def _validate(self) -> None:
        if not self.succ.get(()):
            raise EmptyTree("the root has no successors")
        for node in self.nodes:
            if len(node) < self.depth and node not in self.succ:
                raise ValueError(f"node '{format_seq(node)}' below depth has no successor entry")
        for node, children in self.succ.items():
            if len(node) >= self.depth:
                raise ValueError(f"node '{format_seq(node)}' at depth has successors")
            floor = node[-1].max_support if node else -1
            for child in children:
                if child.is_zero:
                    raise DegenerateBlock(f"zero successor under '{format_seq(node)}'")
                if child.min_support <= floor:
                    raise BlockOrderViolation(
                        f"successor {format_vector(child)} does not extend '{format_seq(node)}'"
                    )

    @property
    def stem(self) -> Node:
        """Longest node comparable to every other node."""
        node: Node = ()
        while len(node) < self.depth and len(self.succ.get(node, ())) == 1:
            node = node + (self.succ[node][0],)
        return node

    def successors(self, node: Node) -> tuple[FinVec, ...]:
        return self.succ.get(tuple(node), ())

    def contains(self, node: Iterable[FinVec]) -> bool:
        return tuple(node) in self.nodes

    def level(self, m: int) -> list[Node]:
        return sorted(t for t in self.nodes if len(t) == m)

    def branches(self) -> list[Node]:
        """Nodes of full depth, i.e. the branches [U]."""
        return self.level(self.depth)

    def dead_ends(self) -> list[Node]:
        return sorted(t for t, children in self.succ.items() if not children)

    def is_s_closed(self) -> bool:
        for children in self.succ.values():
            present = set(children)
            for p in children:
                image = weak_tetris(p)
                if not image.is_zero and image not in present:
                    return False
        return True

    def __len__(self) -> int:
        return len(self.nodes)


def build_tree(depth: int, successors: Callable[[Node], Iterable[FinVec]],
               node_budget: int = DEFAULT_NODE_BUDGET) -> FiniteBlockTree:
    """Grow a tree from the root, asking ``successors`` for U_t at each node."""
    succ: dict[Node, tuple[FinVec, ...]] = {}
    frontier: list[Node] = [()]
    count = 1
    for _ in range(depth):
        next_frontier = []
        for node in frontier:
            children = tuple(sorted({p for p in successors(node) if not p.is_zero}))
            succ[node] = children
            count += len(children)
            if count > node_budget:
                raise BudgetExceeded(
                    f"tree exceeds {node_budget} nodes", limit=node_budget, needed=count
                )
            next_frontier.extend(node + (p,) for p in children)
        frontier = next_frontier
    return FiniteBlockTree(depth, succ)


# ---------------------------------------------------------------------------
# S-closure
# ---------------------------------------------------------------------------

def s_close(tree: FiniteBlockTree,
            node_budget: int = DEFAULT_NODE_BUDGET) -> tuple[FiniteBlockTree, dict[Node, Node]]:
    """
    Enlarge a tree to an S-closed one.

    U_t := V_{proj(t)} together with its S-images (zero dropped); a new
    child p projects to the least q in V_{proj(t)} with S(q) = p, so every
    node of U is within distance 1 of its projection. The input stem must be
    empty: the root needs at least two successors.
    """
    if not tree.successors(()):
        raise EmptyTree("cannot close a tree without root successors")
    if tree.stem:
        raise StemNotEmpty(f"tree stem '{format_seq(tree.stem)}' is not empty")
    proj: dict[Node, Node] = {(): ()}
    succ: dict[Node, tuple[FinVec, ...]] = {}
    frontier: list[Node] = [()]
    count = 1
    for _ in range(tree.depth):
        next_frontier = []
        for node in frontier:
            base = tree.successors(proj[node])
            base_set = set(base)
            children = set(base)
            children.update(weak_tetris(q) for q in base)
            children.discard(FinVec.zero())
            succ[node] = tuple(sorted(children))
            count += len(children)
            if count > node_budget:
                raise BudgetExceeded(
                    f"S-closure exceeds {node_budget} nodes", limit=node_budget, needed=count
                )
            for p in succ[node]:
                if p in base_set:
                    image = p
                else:
                    image = min(q for q in base if weak_tetris(q) == p)
                child = node + (p,)
                proj[child] = proj[node] + (image,)
                next_frontier.append(child)
        frontier = next_frontier
    closed = FiniteBlockTree(tree.depth, succ)
    log.debug(f"S-closure grew {len(tree)} nodes to {len(closed)}")
    return closed, proj


def audit_s_closure(original: FiniteBlockTree, closed: FiniteBlockTree,
                    proj: dict[Node, Node]) -> list[str]:
    """Check S-closedness, nodewise projection distance and branch containment."""
    issues = []
    if not closed.is_s_closed():
        issues.append("closed tree is not S-closed")
    for node in sorted(closed.nodes):
        image = proj.get(node)
        if image is None:
            issues.append(f"node '{format_seq(node)}' has no projection")
            continue
        if len(image) != len(node) or not original.contains(image):
            issues.append(f"projection of '{format_seq(node)}' is not a node of the original tree")
            continue
        gap = seq_dist(BlockSeq(node), BlockSeq(image)) if node else 0
        if gap > 1:
            issues.append(f"node '{format_seq(node)}' is at distance {gap} from its projection")
    original_branches = set(original.branches())
    for branch in closed.branches():
        if proj.get(branch) not in original_branches:
            issues.append(f"branch '{format_seq(branch)}' does not project to a branch")
    return issues


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    """A block sequence P with a decreasing chain A_0 >= A_1 >= ... of vector sets."""
    blocks: BlockSeq
    chain: tuple[frozenset[FinVec], ...] = ()


@dataclass(frozen=True, order=True)
class CertificateViolation:
    """
    One failed containment.

    prop is "chain", "(1) member", "(1) neighbourhood" or "(2)"; index is n
    (for "(2)" the lower end m); node is the tree node checked.
    """
    prop: str
    index: int
    node: Node = ()
    element: FinVec = field(default_factory=FinVec.zero)
    detail: str = ""

    def __str__(self) -> str:
        where = f" node='{format_seq(self.node)}'" if self.node else ""
        return (f"{self.prop} n={self.index}{where} element={format_vector(self.element)}"
                f"{' ' + self.detail if self.detail else ''}")


@dataclass
class CertificateReport:
    violations: list[CertificateViolation]
    nodes_checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations


def synth_tree(seq: BlockSeq, depth: int, span_budget: int = DEFAULT_SPAN_BUDGET,
               node_budget: int = DEFAULT_NODE_BUDGET) -> tuple[FiniteBlockTree, Certificate]:
    """
    Build an S-closed tree and a certificate for seq.

    With B the (-T)-span of the blocks usable after t, the successor set of t
    is B, -B, S[B] and S[-B]; the chain is A_n := (-T)-span of p_n, p_{n+1}, ...
    """
    if len(seq) == 0:
        raise EmptyTree("cannot synthesise a tree from an empty sequence")
    n_blocks = len(seq)
    tail_spans = [
        enum_span(BlockSeq(seq.blocks[i:]), SpanMode.NT, span_budget) for i in range(n_blocks)
    ] + [[]]
    closures = []
    for span in tail_spans:
        closure = set(span)
        closure.update(neg(b) for b in span)
        closure.update(weak_tetris(x) for x in list(closure))
        closure.discard(FinVec.zero())
        closures.append(tuple(sorted(closure)))

    def tail(node: Node) -> int:
        if not node:
            return 0
        floor = node[-1].max_support
        for i, block in enumerate(seq):
            if block.min_support > floor:
                return i
        return n_blocks

    def successors(node: Node) -> Iterable[FinVec]:
        floor = node[-1].max_support if node else -1
        return [x for x in closures[tail(node)] if x.min_support > floor]

    tree = build_tree(depth, successors, node_budget)
    certificate = Certificate(seq, tuple(frozenset(span) for span in tail_spans))
    log.info(f"Synthesised tree of depth {depth} with {len(tree)} nodes over {n_blocks} blocks")
    return tree, certificate


def _within_one(target: FinVec, candidates: tuple[FinVec, ...], present: set[FinVec]) -> bool:
    if target in present:
        return True
    return any(dist(target, c) <= 1 for c in candidates)


def _support_level(node_sum: FinVec, owner: dict[int, int]) -> Optional[int]:
    """Least n with supp(node_sum) inside the supports of p_0..p_{n-1}, or None."""
    level = 0
    for index in support(node_sum):
        if index not in owner:
            return None
        level = max(level, owner[index] + 1)
    return level


def verify_certificate(tree: FiniteBlockTree, certificate: Certificate,
                       workers: int = 1) -> CertificateReport:
    """
    Check the certificate against the tree exhaustively:
    (1) A_n inside U_t and -(U_t)_1 for every node t supported in the first n blocks,
    (2) the (-T)-span of p_m..p_n inside A_m for all m <= n.
    """
    chain = certificate.chain
    seq = certificate.blocks
    violations: list[CertificateViolation] = []
    if not chain:
        return CertificateReport([], 0)

    for n in range(1, len(chain)):
        for element in sorted(chain[n] - chain[n - 1]):
            violations.append(CertificateViolation("chain", n, (), element, "not in A_{n-1}"))

    for m in range(min(len(seq), len(chain))):
        for n in range(m, len(seq)):
            for element in enum_span(BlockSeq(seq.blocks[m:n + 1]), SpanMode.NT):
                if element not in chain[m]:
                    violations.append(CertificateViolation("(2)", m, (), element, f"upper={n}"))

    owner = {index: i for i, block in enumerate(seq) for index in support(block)}

    def check_node(node: Node) -> list[CertificateViolation]:
        start = _support_level(union(node), owner)
        if start is None or start >= len(chain):
            return []
        children = tree.successors(node)
        present = set(children)
        demanded = set().union(*chain[start:])
        found = []
        for element in sorted(demanded):
            if element not in present:
                found.append(CertificateViolation("(1) member", start, node, element))
            if not _within_one(neg(element), children, present):
                found.append(CertificateViolation("(1) neighbourhood", start, node, element))
        return found

    nodes = sorted(tree.succ)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for found in pool.map(check_node, nodes):
            violations.extend(found)
    violations.sort()
    if violations:
        log.warning(f"Certificate check found {len(violations)} violation(s)")
    return CertificateReport(violations, len(nodes))


# ---------------------------------------------------------------------------
# Rewriting
# ---------------------------------------------------------------------------

def case1_normalize(combo: Combo) -> Combo:
    """
    Turn a PM descriptor with a (+1, level 0) term into a (-T) descriptor.

    Terms with sign +1 and even level, or sign -1 and odd level, keep their
    level; the others move one level up (possibly to k, where they vanish).
    """
    if combo.mode is not SpanMode.PM:
        raise InvalidCombo(f"expected a PM descriptor, got {combo.mode.value}")
    if not any(t.sign == 1 and t.level == 0 for t in combo.terms):
        raise Case1PreconditionFailed(f"no term with sign +1 and level 0 in {combo}")
    terms = []
    for t in combo.terms:
        keep = (t.sign == 1) == (t.level % 2 == 0)
        terms.append(Term(t.index, 1, t.level if keep else t.level + 1))
    return Combo(tuple(terms), SpanMode.NT)


@dataclass(frozen=True)
class RewriteStep:
    position: int
    case: int
    original: FinVec
    rewritten: FinVec
    distance: int
    descriptor: Combo
    support_contained: bool


@dataclass
class RewriteResult:
    rewritten: BlockSeq
    steps: list[RewriteStep]

    @property
    def max_distance(self) -> int:
        return max((s.distance for s in self.steps), default=0)


def rewrite_into_tree(q_seq: BlockSeq, seq: BlockSeq, tree: FiniteBlockTree,
                      certificate: Certificate) -> RewriteResult:
    """
    Rewrite a block subsequence Q of P into a branch prefix Q' of an S-closed tree.

    Each q_n becomes q'_n with dist(q_n, q'_n) <= 3 and supp q'_n inside supp q_n.
    """
    if certificate.blocks != seq:
        raise CertificateInsufficient("the certificate was built for a different sequence")
    if len(q_seq) > tree.depth:
        raise DepthExceeded(f"sequence of length {len(q_seq)} exceeds tree depth {tree.depth}")

    node: Node = ()
    steps = []
    for position, q in enumerate(q_seq):
        combo = decompose(q, seq, SpanMode.PM)
        if combo is None:
            raise NotASubsequence(f"block {position} ({format_vector(q)}) is not in the span")
        children = tree.successors(node)
        present = set(children)

        if any(t.sign == 1 and t.level == 0 for t in combo.terms):
            descriptor = case1_normalize(combo)
            rewritten = combine(seq, descriptor)
            case = 1
        else:
            descriptor = case1_normalize(combo.negated())
            target = neg(combine(seq, descriptor))
            if not children:
                raise CertificateInsufficient(f"node '{format_seq(node)}' has no successors")
            nearest = min(children, key=lambda x: (dist(target, x), x))
            if dist(target, nearest) > 1:
                raise CertificateInsufficient(
                    f"no successor within 1 of {format_vector(target)} under '{format_seq(node)}'"
                )
            rewritten = weak_tetris(nearest)
            if rewritten.is_zero:
                raise DegenerateBlock(f"S annihilated {format_vector(nearest)}")
            case = 2

        if rewritten not in present:
            raise CertificateInsufficient(
                f"{format_vector(rewritten)} is not a successor of '{format_seq(node)}'"
            )
        steps.append(RewriteStep(
            position=position,
            case=case,
            original=q,
            rewritten=rewritten,
            distance=dist(q, rewritten),
            descriptor=descriptor,
            support_contained=set(support(rewritten)) <= set(support(q)),
        ))
        node = node + (rewritten,)
    return RewriteResult(BlockSeq(node), steps)


def nt_subsequences_in_tree(seq: BlockSeq, tree: FiniteBlockTree,
                            length: Optional[int] = None) -> list[BlockSeq]:
    """Every Q <=_(-T) P up to the given length must be a tree node; returns those that are not."""
    limit = tree.depth if length is None else min(length, tree.depth)
    missing = []
    for d in range(1, limit + 1):
        for q_seq in enum_span_tuples(seq, d, SpanMode.NT):
            if not tree.contains(q_seq.blocks):
                missing.append(q_seq)
    return missing


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def format_tree(tree: FiniteBlockTree) -> str:
    """One node per line, ``level|parent-path|vector``, after a ``depth=`` header."""
    lines = [f"depth={tree.depth}"]
    for node in sorted(tree.nodes, key=lambda t: (len(t), t)):
        if node:
            lines.append(f"{len(node)}|{format_seq(node[:-1])}|{format_vector(node[-1])}")
    return "\n".join(lines) + "\n"


def parse_tree(text: str) -> FiniteBlockTree:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("depth="):
        raise ParseError("tree text must start with 'depth=<n>'")
    try:
        depth = int(lines[0].split("=", 1)[1])
    except ValueError:
        raise ParseError(f"bad depth line '{lines[0]}'")
    children: dict[Node, list[FinVec]] = {}
    nodes: set[Node] = {()}
    for line in lines[1:]:
        parts = line.split("|")
        if len(parts) != 3:
            raise ParseError(f"bad tree line '{line}'")
        parent = parse_seq(parts[1]).blocks
        block = parse_vector(parts[2])
        if int(parts[0]) != len(parent) + 1:
            raise ParseError(f"level does not match parent path in '{line}'")
        children.setdefault(parent, []).append(block)
        nodes.add(parent + (block,))
    bound = max((b.k for t in nodes for b in t), default=1)
    succ: dict[Node, tuple[FinVec, ...]] = {}
    for node in nodes:
        if len(node) < depth:
            key = tuple(b.retag(bound) for b in node)
            succ[key] = tuple(sorted(b.retag(bound) for b in children.get(node, [])))
    return FiniteBlockTree(depth, succ)


def format_certificate(certificate: Certificate) -> str:
    lines = [f"P:{format_seq(certificate.blocks)}"]
    for n, members in enumerate(certificate.chain):
        lines.append(f"A{n}:{format_seq(sorted(members))}")
    return "\n".join(lines) + "\n"


def parse_certificate(text: str) -> Certificate:
    blocks: Optional[BlockSeq] = None
    chain: list[frozenset[FinVec]] = []
    for line in (line.strip() for line in text.splitlines()):
        if not line:
            continue
        head, sep, body = line.partition(":")
        if not sep:
            raise ParseError(f"bad certificate line '{line}'")
        if head == "P":
            blocks = parse_seq(body)
        elif head.startswith("A") and head[1:].isdigit():
            if int(head[1:]) != len(chain):
                raise ParseError(f"chain sets out of order at '{head}'")
            members = [parse_vector(part) for part in body.split(";")] if body else []
            chain.append(frozenset(members))
        else:
            raise ParseError(f"bad certificate line '{line}'")
    if blocks is None:
        raise ParseError("certificate has no 'P:' line")
    return Certificate(blocks, tuple(frozenset(v.retag(blocks.k) for v in s) for s in chain))
