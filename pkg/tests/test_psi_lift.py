#!/usr/bin/env python3
"""
Unit tests for psi_lift.py
Tests the scale4 section of psi and lifting of sequences, descriptors and colourings.
"""

import unittest
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from hypothesis import given, settings, strategies as st

from colorings import ConstColoring, SignAtMinColoring, SuppParityColoring
from errors import InvalidCombo, NotASubsequence
from fin_vectors import FinVec, parse_seq, parse_vector, psi
from psi_lift import (
    lift_block,
    lift_combo,
    lift_subsequence,
    psi_seq,
    pushforward_coloring,
    scale4,
)
from span_enum import Combo, SpanMode, combine, is_block_subsequence, iter_combos

from tests.test_span_enum import block_sequences


@st.composite
def vectors(draw, max_k: int = 3, window: int = 8):
    k = draw(st.integers(1, max_k))
    values = draw(st.dictionaries(st.integers(0, window - 1), st.integers(-k, k), max_size=window))
    return FinVec.of(values, k)


class TestScale4(unittest.TestCase):
    """Tests for scale4 and lift_block."""

    def test_scale4(self):
        lifted = scale4(parse_vector("0:2,1:-1"))
        self.assertEqual(lifted, parse_vector("0:8,1:-4"))
        self.assertEqual(lifted.k, 8)

    @given(vectors())
    def test_section_of_psi(self, vec):
        self.assertEqual(psi(vec.k, scale4(vec)), vec)

    def test_lift_block_keeps_supports(self):
        seq = parse_seq("0:2,1:-1;3:2")
        lifted = lift_block(seq)
        self.assertEqual(lifted, parse_seq("0:8,1:-4;3:8"))
        self.assertEqual(psi_seq(seq.k, lifted), seq)


class TestLiftCombo(unittest.TestCase):
    """Tests for lift_combo and lift_subsequence."""

    def test_levels_scale(self):
        combo = Combo.of([(0, 1, 0), (1, -1, 1)])
        self.assertEqual(lift_combo(combo, 2), Combo.of([(0, 1, 0), (1, -1, 4)]))

    def test_only_pm_lifts(self):
        with self.assertRaises(InvalidCombo):
            lift_combo(Combo.of([(0, 0)], SpanMode.NT), 2)
        with self.assertRaises(InvalidCombo):
            lift_combo(Combo.of([(0, 1, 2)]), 2)

    def test_lift_subsequence(self):
        seq = parse_seq("0:2;1:2")
        q_seq = parse_seq("0:2,1:-1")
        lifted = lift_subsequence(q_seq, seq)
        self.assertEqual(lifted, parse_seq("0:8,1:-4"))
        self.assertEqual(psi_seq(2, lifted), q_seq)
        self.assertTrue(is_block_subsequence(lifted, lift_block(seq))[0])

    def test_lift_subsequence_rejects_outsiders(self):
        with self.assertRaises(NotASubsequence):
            lift_subsequence(parse_seq("0:1", 2), parse_seq("0:2"))
        with self.assertRaises(NotASubsequence):
            lift_subsequence(parse_seq("0:3"), parse_seq("0:2"))

    @settings(max_examples=40, deadline=None)
    @given(block_sequences(max_m=3))
    def test_lifted_descriptors_project_back(self, seq):
        lifted = lift_block(seq)
        for combo in iter_combos(len(seq), seq.k):
            image = combine(lifted, lift_combo(combo, seq.k))
            self.assertEqual(psi(seq.k, image), combine(seq, combo))


class TestLiftedColoring(unittest.TestCase):
    """Tests for the pushforward colouring c o psi."""

    def test_vectors(self):
        base = SignAtMinColoring()
        lifted = pushforward_coloring(base, 1)
        self.assertEqual(lifted.colors, 2)
        self.assertEqual(lifted.description, "lift(sign_at_min)")
        for text in ("0:1", "0:-1,2:1", "3:1,4:-1"):
            vec = parse_vector(text)
            self.assertEqual(lifted(scale4(vec)), base(vec))

    def test_tuples(self):
        base = SuppParityColoring(arity=2, colors=2)
        lifted = pushforward_coloring(base, 2)
        seq = parse_seq("0:2,1:1;3:-2")
        self.assertEqual(lifted(lift_block(seq)), base(seq))

    def test_tuples_with_vanishing_images(self):
        seq = parse_seq("0:4;1:3", 4)
        self.assertTrue(psi(1, seq[1]).is_zero)
        self.assertEqual(pushforward_coloring(ConstColoring(0, arity=2), 1)(seq), 0)
        self.assertEqual(pushforward_coloring(SuppParityColoring(arity=2, colors=2), 1)(seq), 1)


if __name__ == '__main__':
    unittest.main()
