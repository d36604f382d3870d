#!/usr/bin/env python3
"""Hecke operators on rank-strata indicators and the R(p, beta) identity."""

import os
import sys
import unittest
from fractions import Fraction

current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
sys.path.insert(0, parent_dir)

from errors import DomainError
from hecke_operators import (
    ALT_G3_OPERATOR,
    COMBINATION_OPERATORS,
    LaurentPoly2,
    StrataFn,
    apply_hecke_counts,
    central_twist,
    combination_coefficients,
    expected_count,
    grid_constancy,
    grid_points,
    hecke_reps,
    offset_pattern,
    operator_degree_check,
    r_poly_factored,
    r_poly_from_operators,
    r_poly_identity,
    r_poly_long,
    r_value,
    verify_lemma47,
)
from hecke_cosets import right_coset_reps
from normal_forms import DivisorType, Rank1, Rank2

SLOW = os.getenv("GSP4_SLOW_TESTS") == "1"


def _op(name):
    return next(op for op in COMBINATION_OPERATORS + (ALT_G3_OPERATOR,) if op.name == name)


class TestLaurentPoly(unittest.TestCase):
    def test_arithmetic(self):
        p = LaurentPoly2.monomial(1, 1, 0)
        x = LaurentPoly2.monomial(1, 0, 1)
        self.assertEqual((1 + p) * (1 - p), 1 - p ** 2)
        self.assertEqual(x - x, LaurentPoly2())
        self.assertEqual((p * x).evaluate(2, Fraction(1, 4)), Fraction(1, 2))

    def test_negative_power_rejected(self):
        with self.assertRaises(DomainError):
            LaurentPoly2.monomial(1, 1, 0) ** -1


class TestRPoly(unittest.TestCase):
    def test_identity(self):
        self.assertTrue(r_poly_identity())
        self.assertEqual(r_poly_long(), r_poly_factored())
        self.assertEqual(r_poly_long(), r_poly_from_operators())
        self.assertEqual(len(r_poly_long().terms), 14)

    def test_quartic_roots(self):
        for p in (2, 3, 5):
            for beta in range(4):
                self.assertEqual(r_value(p, beta), 1)

    def test_value(self):
        self.assertEqual(r_value(2, 4), Fraction(709, 1024))


class TestOperators(unittest.TestCase):
    def test_lambda_exponents(self):
        self.assertEqual([op.lambda_exponent() for op in COMBINATION_OPERATORS], [1, 2, 2, 3, 4])
        self.assertEqual(combination_coefficients(2), (1, -2, -10, 8, -64))

    def test_degree_check(self):
        for p in (2, 3):
            self.assertTrue(all(operator_degree_check(p).values()))

    def test_rep_counts(self):
        self.assertEqual(len(hecke_reps(_op("g2^-1 g1").element(2), 2)), 15)
        self.assertEqual(len(hecke_reps(_op("g2^-2 g3").element(2), 2)), 30)
        self.assertEqual(len(hecke_reps(_op("g2^-1").element(3), 3)), 1)
        with self.assertRaises(DomainError):
            hecke_reps(_op("g2^-1").element(2), 4)


class TestCounts(unittest.TestCase):
    def test_g1_at_diagonal_point(self):
        counts = apply_hecke_counts(_op("g2^-1 g1").element(2), 2, Rank2(1, 1))
        self.assertEqual(counts, StrataFn({Rank2(0, 0): 8, Rank2(0, 1): 6, Rank2(1, 1): 1}))
        counts = apply_hecke_counts(_op("g2^-1 g1").element(3), 3, Rank2(2, 2))
        self.assertEqual(counts, StrataFn({Rank2(1, 1): 27, Rank2(1, 2): 12, Rank2(2, 2): 1}))

    def test_g1_off_diagonal_point(self):
        counts = apply_hecke_counts(_op("g2^-1 g1").element(2), 2, Rank2(1, 3))
        self.assertEqual(counts, StrataFn({Rank2(0, 2): 8, Rank2(0, 3): 4, Rank2(1, 2): 2, Rank2(1, 3): 1}))

    def test_g3_counts_into_origin(self):
        g = _op("g2^-2 g3").element(2)
        got = [apply_hecke_counts(g, 2, pt)[Rank2(0, 0)] for pt in (Rank2(0, 1), Rank2(1, 1), Rank2(1, 2), Rank2(2, 2))]
        self.assertEqual(got, [1, 3, 8, 0])

    def test_central_shift(self):
        for k in (1, 2, 3):
            counts = apply_hecke_counts(_op("g2^-1").element(3), 3, Rank2(k, k))
            self.assertEqual(counts, StrataFn({Rank2(k - 1, k - 1): 1}))

    def test_mass_conservation(self):
        p = 2
        for op in COMBINATION_OPERATORS:
            g = op.element(p)
            n = len(hecke_reps(g, p))
            for pt in (Rank2(0, 0), Rank2(1, 3), Rank1(2)):
                self.assertEqual(apply_hecke_counts(g, p, pt).total(), n, (op.name, pt))

    def test_expected_count_merges_labels(self):
        poly = {(1, 0): 2, (0, 1): 2, (1, 1): 10}
        self.assertEqual(expected_count(poly, Rank2(0, 1)), 4)
        self.assertEqual(expected_count(poly, Rank2(1, 1)), 10)
        self.assertEqual(expected_count(poly, Rank1(1)), 0)
        self.assertEqual(expected_count({}, Rank1(0)), 0)

    def test_offset_pattern(self):
        pattern = offset_pattern(_op("g2^-1 g1").element(2), 2, Rank2(1, 1))
        self.assertEqual(pattern, {(2, -1, -1): 8, (2, -1, 0): 6, (2, 0, 0): 1})

    def test_central_twist(self):
        reps = right_coset_reps(DivisorType(1, 1, 2, 2))
        twisted = central_twist(reps, 1, 2)
        self.assertEqual(len(twisted), 15)
        self.assertTrue(all(h.lam == Fraction(1, 2) for h in twisted))
        self.assertEqual(twisted[0].scale(2).mat, reps[0].similitude().mat)
        self.assertTrue(all(h.lam == 2 for h in central_twist(reps, 0, 2)))

    def test_grid_constancy(self):
        self.assertTrue(grid_constancy(_op("g2^-1 g1").element(2), 2, 3))

    def test_grid_points(self):
        pts = grid_points(2)
        self.assertEqual(len(pts), 6 + 3)
        self.assertIn(Rank2(0, 2), pts)


class TestLemma47(unittest.TestCase):
    def test_p2(self):
        report = verify_lemma47(2, 3)
        self.assertTrue(report.all_ok, report.failures()[:5])
        self.assertEqual(report.failures(), [])
        self.assertTrue(report.combination_by_twist[2])
        d = report.to_dict()
        self.assertEqual(d["combination_by_g3_twist"]["2"], True)
        self.assertEqual(len(report.to_frame()), len(report.rows))
        frame = report.to_frame().set_index(["check", "operator", "point"])
        self.assertEqual(len(frame), 168)
        self.assertEqual(frame.loc[("expansion_f1", "g2^-1 g1", "Rank2{1,1}"), "computed"], 8)
        self.assertEqual(frame.loc[("expansion_f1", "g2^-1 g1", "Rank2{0,1}"), "computed"], 2)
        self.assertEqual(frame.loc[("expansion_f1", "g2^-2 g3", "Rank2{1,1}"), "computed"], 3)
        self.assertEqual(frame.loc[("expansion_f1", "g2^-2 g1", "Rank2{2,2}"), "computed"], 8)
        self.assertEqual(frame.loc[("expansion_f0", "g2^-2 g3", "Rank1{1}"), "computed"], 13)

    def test_radius_too_small(self):
        with self.assertRaises(DomainError):
            verify_lemma47(2, 1)

    @unittest.skipUnless(SLOW, "set GSP4_SLOW_TESTS=1 to run")
    def test_p3(self):
        report = verify_lemma47(3, 2)
        self.assertTrue(report.all_ok, report.failures()[:5])


if __name__ == "__main__":
    unittest.main()
