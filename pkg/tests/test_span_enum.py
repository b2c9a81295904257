#!/usr/bin/env python3
"""
Unit tests for span_enum.py
Tests combination descriptors, span enumeration, counting and decomposition.
"""

import itertools
import unittest
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from hypothesis import given, settings, strategies as st

from errors import AmplitudeMismatch, BudgetExceeded, InvalidCombo, ParseError
from fin_vectors import BlockSeq, FinVec, format_vector, parse_seq, parse_vector
from span_enum import (
    Combo,
    SpanMode,
    Term,
    combine,
    decompose,
    enum_span,
    enum_span_tuples,
    format_combo,
    is_block_subsequence,
    is_nt_subsequence,
    iter_combos,
    parse_combo,
    span_size,
    validate_combo,
)


@st.composite
def block_sequences(draw, max_m: int = 4, max_k: int = 3, positive: bool = False):
    m = draw(st.integers(1, max_m))
    k = draw(st.integers(1, max_k))
    blocks = []
    start = 0
    for _ in range(m):
        width = draw(st.integers(1, 2))
        low = 0 if positive else -k
        values = {n: draw(st.integers(low, k)) for n in range(start, start + width)}
        peak = draw(st.integers(start, start + width - 1))
        values[peak] = k if positive else draw(st.sampled_from([k, -k]))
        blocks.append(FinVec.of(values, k))
        start += width + draw(st.integers(0, 1))
    return BlockSeq(tuple(blocks))


class TestCombine(unittest.TestCase):
    """Tests for combine and validate_combo."""

    def setUp(self):
        self.seq = parse_seq("0:2;1:2")

    def test_pm_combination(self):
        combo = Combo.of([(0, 1, 0), (1, -1, 1)])
        self.assertEqual(combine(self.seq, combo), parse_vector("0:2,1:-1"))

    def test_identity_combination(self):
        self.assertEqual(combine(parse_seq("0:2"), Combo.of([(0, 1, 0)])), parse_vector("0:2"))

    def test_nt_combination(self):
        combo = Combo.of([(0, 0), (1, 1)], SpanMode.NT)
        self.assertEqual(combine(self.seq, combo), parse_vector("0:2,1:-1"))

    def test_nt_dropped_term(self):
        """A level-k NT term vanishes from the sum."""
        combo = Combo.of([(0, 0), (1, 2)], SpanMode.NT)
        self.assertEqual(combine(self.seq, combo), parse_vector("0:2"))
        self.assertEqual(combo.without_dropped(2), Combo.of([(0, 0)], SpanMode.NT))

    def test_result_keeps_sequence_bound(self):
        combo = Combo.of([(0, 1, 1), (1, 1, 0)])
        self.assertEqual(combine(self.seq, combo).k, 2)

    def test_invalid_combos(self):
        bad = [
            Combo(()),
            Combo.of([(1, 1, 0), (0, 1, 0)]),
            Combo.of([(0, 1, 0), (2, 1, 0)]),
            Combo.of([(0, 1, 1)]),
            Combo.of([(0, 1, 2)]),
            Combo.of([(0, 2, 0)]),
            Combo.of([(0, -1, 0)], SpanMode.NT),
            Combo.of([(0, 0), (1, 3)], SpanMode.NT),
            Combo.of([(0, 0), (1, 2)], SpanMode.EXACT),
        ]
        for combo in bad:
            with self.subTest(combo=combo.terms):
                with self.assertRaises(InvalidCombo):
                    validate_combo(combo, 2, 2)

    def test_negated(self):
        combo = Combo.of([(0, 1, 0), (1, -1, 1)])
        self.assertEqual(combo.negated(), Combo.of([(0, -1, 0), (1, 1, 1)]))
        with self.assertRaises(InvalidCombo):
            Combo.of([(0, 0)], SpanMode.NT).negated()


class TestDecompose(unittest.TestCase):
    """Tests for decompose and the subsequence relations."""

    def test_decompose_pm(self):
        seq = parse_seq("0:2;1:2")
        self.assertEqual(
            decompose(parse_vector("0:2,1:-1"), seq),
            Combo((Term(0, 1, 0), Term(1, -1, 1)), SpanMode.PM),
        )

    def test_not_in_span(self):
        self.assertIsNone(decompose(parse_vector("0:1", 2), parse_seq("0:2")))
        self.assertIsNone(decompose(parse_vector("0:2,5:1", 2), parse_seq("0:2")))
        self.assertIsNone(decompose(FinVec.zero(2), parse_seq("0:2")))

    def test_amplitude_above_host_is_not_in_span(self):
        self.assertIsNone(decompose(parse_vector("0:3"), parse_seq("0:2")))
        self.assertIsNone(decompose(parse_vector("0:2,1:-3"), parse_seq("0:2;1:2")))
        inside, witnesses = is_block_subsequence(parse_seq("0:3"), parse_seq("0:2;1:2"))
        self.assertFalse(inside)
        self.assertEqual(witnesses, [])

    def test_generator_membership(self):
        seq = parse_seq("0:2,1:-1;3:2;4:-2")
        for index, block in enumerate(seq):
            self.assertEqual(decompose(block, seq), Combo((Term(index, 1, 0),)))

    def test_is_block_subsequence(self):
        seq = parse_seq("0:2;1:2")
        inside, witnesses = is_block_subsequence(seq, seq)
        self.assertTrue(inside)
        self.assertEqual(len(witnesses), 2)
        self.assertTrue(is_block_subsequence(parse_seq("0:2,1:-1"), seq)[0])
        self.assertFalse(is_block_subsequence(parse_seq("0:1", 2), parse_seq("0:2"))[0])

    def test_is_nt_subsequence(self):
        seq = parse_seq("0:2;1:2")
        self.assertTrue(is_nt_subsequence(parse_seq("0:2,1:-1"), seq)[0])
        self.assertFalse(is_nt_subsequence(parse_seq("0:-2,1:2"), seq)[0])


class TestEnumeration(unittest.TestCase):
    """Tests for enum_span, span_size and enum_span_tuples."""

    def test_single_block(self):
        found = enum_span(parse_seq("0:1"))
        self.assertEqual([format_vector(x) for x in found], ["0:-1", "0:1"])

    def test_pm_size_16(self):
        self.assertEqual(len(enum_span(parse_seq("0:2;1:2"))), 16)

    def test_nt_listing(self):
        found = enum_span(parse_seq("0:2;1:2"), SpanMode.NT)
        self.assertEqual(
            [format_vector(x) for x in found],
            ["0:-1,1:2", "0:2", "0:2,1:-1", "0:2,1:2", "1:2"],
        )

    def test_span_size_values(self):
        self.assertEqual(span_size(1, 2), 2)
        self.assertEqual(span_size(2, 2), 16)
        self.assertEqual(span_size(2, 1), 8)
        self.assertEqual(span_size(2, 2, SpanMode.NT), 5)
        self.assertEqual(span_size(3, 1, SpanMode.EXACT), 7)

    def test_budget_refusal(self):
        with self.assertRaises(BudgetExceeded) as ctx:
            enum_span(parse_seq("0:2;1:2"), budget=10)
        self.assertEqual(ctx.exception.needed, 16)
        self.assertEqual(ctx.exception.limit, 10)

    def test_every_element_attains_k(self):
        for element in enum_span(parse_seq("0:3;2:-3,3:1")):
            self.assertTrue(element.attains(3))

    def test_blocks_must_attain_the_bound(self):
        seq = parse_seq("0:2;1:1")
        self.assertEqual(seq.k, 2)
        with self.assertRaises(AmplitudeMismatch):
            enum_span(seq)
        with self.assertRaises(AmplitudeMismatch):
            enum_span_tuples(seq, 2)
        with self.assertRaises(AmplitudeMismatch):
            combine(seq, Combo.of([(0, 1, 0)]))
        with self.assertRaises(AmplitudeMismatch):
            decompose(parse_vector("0:2"), seq)

    def test_tuples(self):
        self.assertEqual(len(enum_span_tuples(parse_seq("0:1"), 1)), 2)
        self.assertEqual(enum_span_tuples(parse_seq("0:1"), 2), [])
        pairs = enum_span_tuples(parse_seq("0:1;1:1"), 2)
        self.assertEqual(len(pairs), 4)
        for pair in pairs:
            self.assertEqual([len(b.entries) for b in pair], [1, 1])

    def test_tuple_budget(self):
        with self.assertRaises(BudgetExceeded):
            enum_span_tuples(parse_seq("0:2;1:2;2:2"), 2, budget=3)

    def test_exhaustive_round_trip_small(self):
        """decompose o combine is the identity for every descriptor over m <= 3, k <= 2."""
        for mode, k, m in itertools.product(SpanMode, (1, 2), (1, 2, 3)):
            seq = BlockSeq(tuple(FinVec(((i, k),), k) for i in range(m)))
            for combo in iter_combos(m, k, mode):
                expected = combo.without_dropped(k) if mode is SpanMode.NT else combo
                with self.subTest(mode=mode, combo=format_combo(combo)):
                    self.assertEqual(decompose(combine(seq, combo), seq, mode), expected)
            self.assertEqual(len(enum_span(seq, mode)), span_size(m, k, mode))

    @settings(max_examples=60, deadline=None)
    @given(block_sequences())
    def test_round_trip_random(self, seq):
        for combo in iter_combos(len(seq), seq.k, SpanMode.PM):
            self.assertEqual(decompose(combine(seq, combo), seq), combo)
        self.assertEqual(len(enum_span(seq)), span_size(len(seq), seq.k))

    @settings(max_examples=40, deadline=None)
    @given(block_sequences(max_m=3), st.data())
    def test_span_monotone(self, seq, data):
        """Q <= P implies the span of Q lies inside the span of P."""
        tuples = enum_span_tuples(seq, 1)
        chosen = data.draw(st.sampled_from(tuples))
        self.assertTrue(set(enum_span(chosen)) <= set(enum_span(seq)))


class TestComboLiterals(unittest.TestCase):
    """Tests for descriptor literals."""

    def test_format(self):
        self.assertEqual(format_combo(Combo.of([(0, 1, 0), (1, -1, 1)])), "PM|0:+:0,1:-:1")
        self.assertEqual(format_combo(Combo.of([(0, 0), (2, 1)], SpanMode.NT)), "NT|0:+:0,2:+:1")

    def test_parse(self):
        self.assertEqual(parse_combo("PM|0:+:0,1:-:1"), Combo.of([(0, 1, 0), (1, -1, 1)]))
        self.assertEqual(parse_combo("nt|0:0,1:1"), Combo.of([(0, 0), (1, 1)], SpanMode.NT))
        self.assertEqual(parse_combo("EX|0:+:0").mode, SpanMode.EXACT)

    def test_parse_errors(self):
        for bad in ("0:+:0", "XX|0:+:0", "PM|0:0", "PM|0:*:0", "PM|a:+:0"):
            with self.subTest(literal=bad):
                with self.assertRaises(ParseError):
                    parse_combo(bad)


if __name__ == '__main__':
    unittest.main()
