#!/usr/bin/env python3
"""
Unit tests for tree_rewrite.py
Tests finite block trees, S-closure, certificates and the two-case rewriting.
"""

import unittest
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from errors import (
    BlockOrderViolation,
    Case1PreconditionFailed,
    CertificateInsufficient,
    DepthExceeded,
    EmptyTree,
    InvalidCombo,
    NotASubsequence,
    ParseError,
    StemNotEmpty,
)
from fin_vectors import BlockSeq, FinVec, dist, parse_seq, parse_vector, support
from selftest import broken_example
from span_enum import Combo, SpanMode, enum_span_tuples
from tree_rewrite import (
    Certificate,
    FiniteBlockTree,
    build_tree,
    case1_normalize,
    format_certificate,
    format_tree,
    nt_subsequences_in_tree,
    parse_certificate,
    parse_tree,
    rewrite_into_tree,
    s_close,
    audit_s_closure,
    synth_tree,
    verify_certificate,
)


def v(text: str, k: int = None) -> FinVec:
    return parse_vector(text, k)


class TestFiniteBlockTree(unittest.TestCase):
    """Tests for tree construction and queries."""

    def test_build_tree(self):
        blocks = [v("0:1"), v("1:1"), v("2:1")]

        def successors(node):
            floor = node[-1].max_support if node else -1
            return [b for b in blocks if b.min_support > floor]

        tree = build_tree(2, successors)
        self.assertEqual(len(tree.level(1)), 3)
        self.assertEqual(len(tree.branches()), 3)
        self.assertEqual(tree.dead_ends(), [(v("2:1"),)])
        self.assertTrue(tree.contains([v("0:1"), v("2:1")]))
        self.assertFalse(tree.contains([v("2:1"), v("0:1")]))

    def test_empty_root_rejected(self):
        with self.assertRaises(EmptyTree):
            FiniteBlockTree(1, {(): ()})

    def test_successor_order_enforced(self):
        with self.assertRaises(BlockOrderViolation):
            FiniteBlockTree(2, {(): (v("0:1"),), (v("0:1"),): (v("0:1"),)})

    def test_stem(self):
        tree = FiniteBlockTree(2, {(): (v("0:1"),), (v("0:1"),): (v("1:1"), v("2:1"))})
        self.assertEqual(tree.stem, (v("0:1"),))


class TestSClosure(unittest.TestCase):
    """Tests for s_close and its audit."""

    def test_closure_adds_images(self):
        tree = FiniteBlockTree(1, {(): (v("0:2,1:1"), v("3:2"))})
        self.assertFalse(tree.is_s_closed())
        closed, proj = s_close(tree)
        self.assertTrue(closed.is_s_closed())
        self.assertEqual(closed.successors(()), (v("0:2"), v("0:2,1:1"), v("3:2")))
        self.assertEqual(proj[(v("0:2"),)], (v("0:2,1:1"),))
        self.assertEqual(audit_s_closure(tree, closed, proj), [])

    def test_closure_of_synthesised_tree_is_itself(self):
        tree, _ = synth_tree(parse_seq("0:2;1:2"), 2)
        closed, proj = s_close(tree)
        self.assertEqual(closed.nodes, tree.nodes)
        self.assertEqual(audit_s_closure(tree, closed, proj), [])

    def test_audit_reports_bad_projection(self):
        tree = FiniteBlockTree(1, {(): (v("0:2,1:1"), v("3:2"))})
        closed, proj = s_close(tree)
        proj[(v("0:2"),)] = (v("5:2"),)
        self.assertEqual(len(audit_s_closure(tree, closed, proj)), 2)

    def test_stem_must_be_empty(self):
        tree = FiniteBlockTree(2, {(): (v("0:2"),), (v("0:2"),): (v("1:2"), v("2:2"))})
        with self.assertRaises(StemNotEmpty):
            s_close(tree)


class TestCertificates(unittest.TestCase):
    """Tests for synth_tree and verify_certificate."""

    def setUp(self):
        self.seq = parse_seq("0:2;1:2")
        self.tree, self.certificate = synth_tree(self.seq, 2)

    def test_synthesised_tree_is_s_closed(self):
        self.assertTrue(self.tree.is_s_closed())
        self.assertIn(v("0:2"), self.tree.successors(()))
        self.assertIn(v("0:-2"), self.tree.successors(()))

    def test_chain_is_decreasing(self):
        chain = self.certificate.chain
        self.assertEqual(len(chain), 3)
        for n in range(1, len(chain)):
            self.assertTrue(chain[n] <= chain[n - 1])
        self.assertEqual(chain[-1], frozenset())

    def test_certificate_passes(self):
        for workers in (1, 4):
            report = verify_certificate(self.tree, self.certificate, workers)
            self.assertTrue(report.passed, [str(x) for x in report.violations])
            self.assertGreater(report.nodes_checked, 0)

    def test_every_nt_subsequence_is_a_node(self):
        self.assertEqual(nt_subsequences_in_tree(self.seq, self.tree), [])

    def test_broken_tree_rejected_at_root(self):
        tree, certificate, expected = broken_example()
        report = verify_certificate(tree, certificate)
        self.assertFalse(report.passed)
        self.assertIn(expected, report.violations)
        self.assertEqual(expected.prop, "(1) member")
        self.assertEqual(expected.index, 0)

    def test_longer_sequence(self):
        seq = parse_seq("0:2,1:-1;3:-2;4:1,5:2")
        tree, certificate = synth_tree(seq, 2)
        self.assertTrue(verify_certificate(tree, certificate).passed)

    def test_empty_sequence_rejected(self):
        with self.assertRaises(EmptyTree):
            synth_tree(BlockSeq(()), 1)


class TestCase1Normalize(unittest.TestCase):
    """Tests for the PM to (-T) normalisation."""

    def test_odd_negative_keeps_level(self):
        combo = Combo.of([(0, 1, 0), (1, -1, 1)])
        self.assertEqual(case1_normalize(combo), Combo.of([(0, 0), (1, 1)], SpanMode.NT))

    def test_odd_positive_moves_up(self):
        combo = Combo.of([(0, 1, 0), (1, 1, 1)])
        self.assertEqual(case1_normalize(combo), Combo.of([(0, 0), (1, 2)], SpanMode.NT))

    def test_precondition(self):
        with self.assertRaises(Case1PreconditionFailed):
            case1_normalize(Combo.of([(0, -1, 0)]))
        with self.assertRaises(InvalidCombo):
            case1_normalize(Combo.of([(0, 0)], SpanMode.NT))


class TestRewriting(unittest.TestCase):
    """Tests for rewrite_into_tree."""

    def setUp(self):
        self.seq = parse_seq("0:2;1:2")
        self.tree, self.certificate = synth_tree(self.seq, 2)

    def rewrite(self, text: str):
        return rewrite_into_tree(parse_seq(text, 2), self.seq, self.tree, self.certificate)

    def test_case2_exact_match(self):
        result = self.rewrite("0:-2")
        step = result.steps[0]
        self.assertEqual(step.case, 2)
        self.assertEqual(step.rewritten, v("0:-2"))
        self.assertEqual(step.distance, 0)

    def test_case1_drops_vanishing_term(self):
        result = self.rewrite("0:2,1:1")
        step = result.steps[0]
        self.assertEqual(step.case, 1)
        self.assertEqual(step.rewritten, v("0:2"))
        self.assertEqual(step.distance, 1)
        self.assertEqual(step.descriptor, Combo.of([(0, 0), (1, 2)], SpanMode.NT))
        self.assertTrue(step.support_contained)

    def test_case2_applies_s(self):
        result = self.rewrite("0:-2,1:1")
        step = result.steps[0]
        self.assertEqual(step.case, 2)
        self.assertEqual(step.rewritten, v("0:-2"))
        self.assertEqual(step.distance, 1)

    def test_two_blocks_form_a_branch(self):
        result = self.rewrite("0:2;1:-2")
        self.assertEqual(result.rewritten, parse_seq("0:2;1:-2"))
        self.assertEqual(result.max_distance, 0)
        self.assertTrue(self.tree.contains(result.rewritten.blocks))

    def test_every_pair_rewrites_within_three(self):
        for q_seq in enum_span_tuples(self.seq, 2):
            result = rewrite_into_tree(q_seq, self.seq, self.tree, self.certificate)
            self.assertLessEqual(result.max_distance, 3)
            self.assertTrue(self.tree.contains(result.rewritten.blocks))
            for step in result.steps:
                self.assertTrue(set(support(step.rewritten)) <= set(support(step.original)))
                self.assertEqual(dist(step.original, step.rewritten), step.distance)

    def test_errors(self):
        with self.assertRaises(NotASubsequence):
            self.rewrite("0:1")
        with self.assertRaises(NotASubsequence):
            rewrite_into_tree(parse_seq("0:3"), self.seq, self.tree, self.certificate)
        with self.assertRaises(DepthExceeded):
            tree, certificate = synth_tree(self.seq, 1)
            rewrite_into_tree(parse_seq("0:2;1:2"), self.seq, tree, certificate)
        with self.assertRaises(CertificateInsufficient):
            rewrite_into_tree(parse_seq("0:2"), self.seq, self.tree, Certificate(parse_seq("0:2")))


class TestSerialisation(unittest.TestCase):
    """Tests for the tree and certificate text formats."""

    def setUp(self):
        self.tree, self.certificate = synth_tree(parse_seq("0:2;1:2"), 2)

    def test_tree_round_trip(self):
        text = format_tree(self.tree)
        self.assertTrue(text.startswith("depth=2\n"))
        self.assertIn("1||0:2\n", text)
        parsed = parse_tree(text)
        self.assertEqual(parsed.depth, 2)
        self.assertEqual(parsed.succ, self.tree.succ)

    def test_certificate_round_trip(self):
        text = format_certificate(self.certificate)
        self.assertTrue(text.startswith("P:0:2;1:2\n"))
        self.assertEqual(parse_certificate(text), self.certificate)

    def test_parse_errors(self):
        with self.assertRaises(ParseError):
            parse_tree("1||0:2\n")
        with self.assertRaises(ParseError):
            parse_tree("depth=1\n2||0:2\n")
        with self.assertRaises(ParseError):
            parse_certificate("A0:0:2\n")
        with self.assertRaises(ParseError):
            parse_certificate("P:0:2\nA1:0:2\n")


if __name__ == '__main__':
    unittest.main()
