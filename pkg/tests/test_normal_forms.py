#!/usr/bin/env python3
"""Smith / Hermite forms, symplectic elementary divisors and rank strata."""

import math
import os
import sys
import unittest
from fractions import Fraction

import numpy as np

current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
sys.path.insert(0, parent_dir)

from errors import DomainError
from normal_forms import (
    DivisorType,
    Rank1,
    Rank2,
    StratumLabel,
    block_upper_form,
    classify_stratum,
    divisor_type_of,
    hnf2,
    hnf2_key,
    padic_block_diagonalize,
    rank_mod_p,
    smith_invariants,
    smith_normal_form,
    symplectic_elementary_divisors,
    valuation,
    xgcd,
)
from symplectic_core import MatQ, Similitude, multiplier, random_word, stratum_point


class TestHelpers(unittest.TestCase):
    def test_xgcd(self):
        for a, b in [(240, 46), (0, 7), (-12, 18), (5, 0), (17, -5)]:
            g, s, t = xgcd(a, b)
            self.assertEqual(g, math.gcd(a, b))
            self.assertEqual(s * a + t * b, g)

    def test_valuation(self):
        self.assertEqual(valuation(Fraction(3, 8), 2), -3)
        self.assertEqual(valuation(54, 3), 3)
        self.assertEqual(valuation(0, 5), math.inf)


class TestDivisorType(unittest.TestCase):
    def test_parse_and_str(self):
        dt = DivisorType.parse("1,1,2,2")
        self.assertEqual(dt.r, 2)
        self.assertEqual(str(dt), "1,1,2,2")
        self.assertEqual(dt.diag(), MatQ.diag(1, 1, 2, 2))

    def test_chain_enforced(self):
        with self.assertRaises(DomainError):
            DivisorType(1, 2, 3, 6)
        with self.assertRaises(DomainError):
            DivisorType(1, 1, 2, 4)
        with self.assertRaises(DomainError):
            DivisorType.parse("1,2,4")

    def test_from_exponents(self):
        self.assertEqual(DivisorType.from_exponents(3, 0, 1, 2), DivisorType(1, 3, 3, 9))
        self.assertEqual(DivisorType(1, 3, 3, 9).exponents(3), (0, 1, 1, 2))


class TestStratumLabel(unittest.TestCase):
    def test_unordered(self):
        self.assertEqual(Rank2(3, 1), Rank2(1, 3))
        self.assertEqual(str(Rank2(2, 0)), "Rank2{0,2}")

    def test_parse(self):
        for lab in (Rank1(4), Rank2(0, 1)):
            self.assertEqual(StratumLabel.parse(str(lab)), lab)

    def test_shift(self):
        self.assertEqual(Rank2(1, 2).shift(-1), Rank2(0, 1))

    def test_bad_rank(self):
        with self.assertRaises(DomainError):
            StratumLabel(3, (0, 0, 0))


class TestSmith(unittest.TestCase):
    def _check(self, rows, expected):
        M = MatQ.from_rows(rows)
        U, S, V = smith_normal_form(M)
        self.assertEqual(U @ M @ V, S)
        self.assertIn(abs(U.det()), (1,))
        self.assertIn(abs(V.det()), (1,))
        self.assertEqual(S, MatQ.diag(*expected))

    def test_examples(self):
        self._check([[2, 0], [0, 3]], (1, 6))
        self._check([[0, 0], [0, 0]], (0, 0))
        self._check([[2, 4], [6, 8]], (2, 4))

    def test_chain_on_4x4(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            rows = rng.integers(-9, 10, size=(4, 4)).tolist()
            s = smith_invariants(MatQ.from_rows(rows))
            for a, b in zip(s, s[1:]):
                self.assertTrue(b == 0 or (a != 0 and b % a == 0), s)
            self.assertEqual(math.prod(s), abs(int(MatQ.from_rows(rows).det())))


class TestHnf(unittest.TestCase):
    def test_examples(self):
        _, H = hnf2(MatQ.diag(1, 5))
        self.assertEqual(H, MatQ.diag(1, 5))
        _, H = hnf2(MatQ.from_rows([[0, 1], [-1, 0]]))
        self.assertEqual(H, MatQ.identity(2))
        D = MatQ.from_rows([[2, 0], [1, 2]])
        U, H = hnf2(D)
        self.assertEqual(H, MatQ.from_rows([[1, 2], [0, 4]]))
        self.assertEqual(U @ D, H)
        self.assertEqual(abs(U.det()), 1)

    def test_key_is_left_invariant(self):
        D = MatQ.from_rows([[3, 1], [0, 9]])
        W = MatQ.from_rows([[2, 1], [1, 1]])
        self.assertEqual(hnf2_key(W @ D), hnf2_key(D))

    def test_singular(self):
        with self.assertRaises(DomainError):
            hnf2(MatQ.from_rows([[1, 2], [2, 4]]))


class TestSymplecticDivisors(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_g3(self):
        for p in (2, 3, 5):
            dt, g1, g2 = symplectic_elementary_divisors(Similitude(MatQ.diag(1, p, p * p, p), p * p))
            self.assertEqual(dt.as_tuple(), (1, p, p, p * p))

    def test_central(self):
        p = 3
        dt, _, _ = symplectic_elementary_divisors(Similitude(MatQ.diag(p, p, p, p), p * p))
        self.assertEqual(dt.as_tuple(), (p, p, p, p))

    def test_random_translates(self):
        p = 2
        g1 = Similitude(MatQ.diag(1, 1, p, p), p)
        for _ in range(25):
            M = random_word(self.rng, 10) @ g1 @ random_word(self.rng, 10)
            dt, w1, w2 = symplectic_elementary_divisors(M)
            self.assertEqual(dt.as_tuple(), (1, 1, p, p))
            self.assertEqual(multiplier(w1), 1)
            self.assertEqual(multiplier(w2), 1)
            self.assertEqual(w1 @ M.mat @ w2, dt.diag())
            self.assertEqual(divisor_type_of(M.mat), dt)

    def test_complete_invariant(self):
        p = 3
        g3 = Similitude(MatQ.diag(1, p, p * p, p), p * p)
        g2 = Similitude(MatQ.diag(p, p, p, p), p * p)
        for _ in range(10):
            a = random_word(self.rng, 6) @ g3 @ random_word(self.rng, 6)
            b = random_word(self.rng, 6) @ g2 @ random_word(self.rng, 6)
            self.assertNotEqual(symplectic_elementary_divisors(a)[0], symplectic_elementary_divisors(b)[0])

    def test_rejects(self):
        with self.assertRaises(DomainError):
            symplectic_elementary_divisors(Similitude(MatQ.diag(1, 1, Fraction(1, 2), Fraction(1, 2)), Fraction(1, 2)))


class TestPadic(unittest.TestCase):
    def test_diagonal_input(self):
        p = 3
        form = padic_block_diagonalize(Similitude(MatQ.diag(1, p, p * p, p), p * p), p)
        self.assertEqual(form.exponents, (0, 1, 1, 2))

    def test_central(self):
        form = padic_block_diagonalize(Similitude(MatQ.diag(5, 5, 5, 5), 25), 5)
        self.assertEqual(form.exponents, (1, 1, 1, 1))

    def test_unit_translate(self):
        rng = np.random.default_rng(5)
        p = 2
        g = random_word(rng, 8) @ Similitude(MatQ.diag(1, 1, p, p), p) @ random_word(rng, 8)
        self.assertEqual(padic_block_diagonalize(g, p).exponents, (0, 0, 1, 1))

    def test_rejects_multiplier_zero(self):
        with self.assertRaises(DomainError):
            padic_block_diagonalize(Similitude(stratum_point(2, 0, 0), 0), 2)


class TestBlockUpper(unittest.TestCase):
    def test_left_reduction(self):
        rng = np.random.default_rng(8)
        g3 = Similitude(MatQ.diag(1, 2, 4, 2), 4)
        for _ in range(20):
            M = random_word(rng, 8) @ g3 @ random_word(rng, 8)
            L, X = block_upper_form(M)
            self.assertEqual(L @ M.mat, X)
            self.assertEqual(multiplier(L), 1)
            _, _, C, _ = X.blocks()
            self.assertTrue(C.is_zero())


class TestStrata(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(classify_stratum(stratum_point(2, 1, 2), 2), Rank2(1, 2))
        self.assertEqual(classify_stratum(stratum_point(2, 3), 2), Rank1(3))
        self.assertEqual(classify_stratum(stratum_point(3, 2, 1), 3), Rank2(1, 2))

    def test_invariance(self):
        rng = np.random.default_rng(13)
        flip = MatQ.diag(1, 1, -1, -1)
        for p in (2, 3):
            for pt, label in ((stratum_point(p, 0, 2), Rank2(0, 2)), (stratum_point(p, 1), Rank1(1))):
                for _ in range(15):
                    M = random_word(rng, 6).mat @ pt @ random_word(rng, 6).mat @ flip
                    self.assertEqual(classify_stratum(M, p), label)

    def test_negative_valuations(self):
        M = stratum_point(2, 0, 1).scale(Fraction(1, 4))
        self.assertEqual(classify_stratum(M, 2), Rank2(-2, -1))

    def test_rejects(self):
        with self.assertRaises(DomainError):
            classify_stratum(MatQ.zeros(4), 2)
        with self.assertRaises(DomainError):
            classify_stratum(MatQ.identity(4), 2)
        with self.assertRaises(DomainError):
            classify_stratum(stratum_point(2, 0, 0).scale(Fraction(1, 3)), 2)

    def test_rank_mod_p(self):
        p = 3
        self.assertEqual(rank_mod_p(MatQ.diag(1, p, p * p, p), p), 1)
        self.assertEqual(rank_mod_p(MatQ.diag(1, 1, p, p), p), 2)


if __name__ == "__main__":
    unittest.main()
