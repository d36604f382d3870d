#!/usr/bin/env python3
"""Dirichlet characters, CRT lifting, L-values and the bound quantity."""

import math
import os
import sys
import unittest

import mpmath
from sympy import primerange, totient

current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
sys.path.insert(0, parent_dir)

from errors import DomainError
from characters import (
    DirichletChar,
    char_from_local,
    character_sum,
    characters_mod,
    conductor,
    crt_lift,
    l_function,
    local_level,
    restricted_product,
    theorem58_bound,
    unit_group_structure,
)

CATALAN = 0.915965594177219
CHI4 = DirichletChar(4, (1,))


class TestUnitGroups(unittest.TestCase):
    def test_small_moduli(self):
        self.assertEqual(unit_group_structure(4).generators, (3,))
        self.assertEqual(unit_group_structure(4).orders, (2,))
        self.assertEqual(unit_group_structure(8).generators, (7, 3))
        self.assertEqual(unit_group_structure(8).orders, (2, 2))
        self.assertEqual(unit_group_structure(5).generators, (2,))
        self.assertEqual(unit_group_structure(5).orders, (4,))

    def test_order_is_totient(self):
        for m in (2, 9, 12, 16, 45, 100):
            self.assertEqual(unit_group_structure(m).order, int(totient(m)))

    def test_crt_compatible_generators(self):
        G = unit_group_structure(12)
        self.assertEqual(G.generators, (7, 5))
        self.assertEqual(G.primes, (2, 3))
        for g, p in zip(G.generators, G.primes):
            rest = 4 if p == 3 else 3
            self.assertEqual(g % rest, 1)


class TestCharacters(unittest.TestCase):
    def test_count_and_principal_first(self):
        for m in (4, 5, 8, 12, 15):
            chars = characters_mod(m)
            self.assertEqual(len(chars), int(totient(m)))
            self.assertTrue(chars[0].is_principal)

    def test_orthogonality(self):
        for m in (4, 5, 8, 12, 15, 16):
            for chi in characters_mod(m):
                total = character_sum(chi)
                if chi.is_principal:
                    self.assertAlmostEqual(total.real, int(totient(m)), places=9)
                else:
                    self.assertLess(abs(total), 1e-9)

    def test_multiplicative(self):
        for m in (5, 12, 16):
            units = [n for n in range(1, m) if math.gcd(n, m) == 1]
            for chi in characters_mod(m):
                for a in units:
                    for b in units:
                        self.assertEqual(chi.value_turn(a * b), (chi.value_turn(a) + chi.value_turn(b)) % 1)

    def test_zero_off_units(self):
        self.assertEqual(CHI4(2), 0)
        self.assertIsNone(CHI4.value_turn(6))
        self.assertEqual(CHI4(3), -1)

    def test_bad_exponents(self):
        with self.assertRaises(DomainError):
            DirichletChar(8, (1,))

    def test_order(self):
        chi = DirichletChar(16, (0, 1))
        self.assertEqual(chi.order(), 4)
        self.assertEqual(chi(3), 1j)


class TestLocalToGlobal(unittest.TestCase):
    def test_single_factor(self):
        self.assertTrue(char_from_local([DirichletChar.principal(4)]).is_principal)
        self.assertEqual(char_from_local([CHI4])(3), -1)

    def test_product(self):
        chi3 = DirichletChar(3, (1,))
        chi = char_from_local([CHI4, chi3])
        self.assertEqual(chi.modulus, 12)
        self.assertEqual(chi(5), -1)
        for n in range(1, 12):
            if math.gcd(n, 12) == 1:
                self.assertEqual(chi(n), CHI4(n) * chi3(n))
        self.assertEqual(chi.local_components(), {2: CHI4, 3: chi3})
        self.assertFalse(char_from_local([DirichletChar.principal(4), chi3]).is_principal)

    def test_rejects(self):
        with self.assertRaises(DomainError):
            char_from_local([])
        with self.assertRaises(DomainError):
            char_from_local([CHI4, DirichletChar(8, (1, 0))])
        with self.assertRaises(DomainError):
            char_from_local([DirichletChar(12, (1, 0))])

    def test_local_level(self):
        principal = local_level(DirichletChar.principal(8))
        self.assertEqual((principal.level, principal.principal), (1, True))
        self.assertEqual(local_level(CHI4.lift_to(8)).level, 2)
        self.assertEqual(local_level(DirichletChar(16, (0, 1))).level, 4)
        self.assertEqual(local_level(DirichletChar(9, (3,))).level, 1)

    def test_conductor(self):
        self.assertEqual(conductor(DirichletChar.principal(12)), 1)
        self.assertEqual(conductor(CHI4.lift_to(8)), 4)
        self.assertEqual(conductor(char_from_local([CHI4, DirichletChar(3, (1,))])), 12)
        self.assertEqual(conductor(char_from_local([CHI4, DirichletChar.principal(3)])), 4)

    def test_lift_keeps_values(self):
        lifted = CHI4.lift_to(24)
        for n in range(1, 24):
            self.assertEqual(lifted(n), CHI4(n) if math.gcd(n, 24) == 1 else 0)
        with self.assertRaises(DomainError):
            CHI4.lift_to(6)


class TestCrtLift(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(crt_lift([(1, 4), (2, 3)]), 5)
        self.assertEqual(crt_lift([(3, 4), (1, 3), (2, 5)]), 7)
        self.assertEqual(crt_lift([(5, 7)]), 5)

    def test_reduces(self):
        pairs = [(3, 8), (2, 9), (4, 25), (6, 7)]
        n = crt_lift(pairs)
        self.assertTrue(0 <= n < 8 * 9 * 25 * 7)
        for a, q in pairs:
            self.assertEqual(n % q, a)

    def test_rejects(self):
        with self.assertRaises(DomainError):
            crt_lift([(1, 4), (1, 6)])
        with self.assertRaises(DomainError):
            crt_lift([(2, 4)])
        with self.assertRaises(DomainError):
            crt_lift([])


class TestLFunction(unittest.TestCase):
    def test_riemann_zeta(self):
        res = l_function(DirichletChar.principal(1), 2, 100_000)
        self.assertLess(abs(res.value - math.pi ** 2 / 6), res.tail_bound + 1e-12)

    def test_catalan_and_leibniz(self):
        self.assertAlmostEqual(l_function(CHI4, 2).value.real, CATALAN, places=10)
        leibniz = l_function(CHI4, 1)
        self.assertLess(abs(leibniz.value - math.pi / 4), leibniz.tail_bound + 1e-12)
        self.assertAlmostEqual(l_function(CHI4, 3).value.real, math.pi ** 3 / 32, places=10)

    def test_critical_strip_for_nontrivial_characters(self):
        for s in (0.25, 0.5, 0.75):
            res = l_function(CHI4, s, 100_000)
            ref = float(mpmath.dirichlet(s, [0, 1, 0, -1]))
            self.assertLessEqual(abs(res.value.real - ref), res.tail_bound, s)
            self.assertAlmostEqual(res.tail_bound, 2 * 100_001 ** -s, places=12)

    def test_against_mpmath(self):
        for chi in characters_mod(5)[1:]:
            period = [complex(chi(n)) for n in range(5)]
            expected = complex(mpmath.dirichlet(2, period))
            got = l_function(chi, 2).value
            self.assertLess(abs(got - expected), 1e-9, str(chi))

    def test_rejects(self):
        with self.assertRaises(DomainError):
            l_function(DirichletChar.principal(4), 1)
        with self.assertRaises(DomainError):
            l_function(CHI4, 0)
        with self.assertRaises(DomainError):
            l_function(CHI4, 2, 0)

    def test_to_dict(self):
        d = l_function(CHI4, 2, 1000).to_dict()
        self.assertEqual(set(d), {"re", "im", "tail_bound", "truncation"})
        self.assertEqual(d["im"], 0)


class TestBoundQuantity(unittest.TestCase):
    def test_single_prime(self):
        res = theorem58_bound(CHI4, 4, [3], truncation=200_000)
        num = (math.pi / 4) * CATALAN * (math.pi ** 3 / 32)
        self.assertAlmostEqual(res.numerator, num, places=4)
        den = 1 / ((1 - 1 / 3) * (1 - 1 / 9) * (1 - 1 / 27))
        self.assertAlmostEqual(res.denominator, den, places=12)
        self.assertAlmostEqual(res.bound, num / den, places=4)

    def test_empty_and_growing_sets(self):
        empty = theorem58_bound(CHI4, 4, [], truncation=100_000)
        self.assertEqual(empty.denominator, 1)
        self.assertEqual(empty.bound, empty.numerator)
        three = theorem58_bound(CHI4, 4, [3], truncation=100_000)
        wide = theorem58_bound(CHI4, 4, list(primerange(5, 100)), truncation=100_000)
        self.assertLess(wide.bound, three.bound)

    def test_sweep_decreases(self):
        cutoffs = (10, 100, 1000, 10_000, 100_000, 1_000_000)
        bounds = [theorem58_bound(CHI4, 4, list(primerange(3, c)), truncation=100_000).bound for c in cutoffs]
        self.assertEqual(bounds, sorted(bounds, reverse=True))
        # decays like 1/log(cutoff); a factor 5 needs the cutoff past 10^5
        self.assertGreater(bounds[0] / bounds[3], 3.5)
        self.assertLess(bounds[0] / bounds[3], 5)
        self.assertGreaterEqual(bounds[0] / bounds[-1], 5)
        self.assertAlmostEqual(bounds[-1] * math.log(1_000_000), 0.603, delta=0.01)

    def test_restricted_product(self):
        primes = list(primerange(3, 50))
        rp = restricted_product(CHI4, 4, primes)
        self.assertGreater(rp, 0)
        self.assertLessEqual(rp, 1)
        self.assertAlmostEqual(theorem58_bound(CHI4, 4, primes, 1000).restricted_product, rp, places=12)

    def test_rejects(self):
        with self.assertRaises(DomainError):
            theorem58_bound(DirichletChar.principal(4), 4, [3])
        with self.assertRaises(DomainError):
            theorem58_bound(CHI4, 5, [3])
        with self.assertRaises(DomainError):
            theorem58_bound(CHI4, 4, [2, 3])
        with self.assertRaises(DomainError):
            theorem58_bound(CHI4, 4, [9])


if __name__ == "__main__":
    unittest.main()
