#!/usr/bin/env python3
"""Brute-force closure of Sp4(Z/N), the congruence degree oracle and coset checks."""

import os
import sys
import unittest

import numpy as np

current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
sys.path.insert(0, parent_dir)

from errors import DomainError, ResourceBudgetError
from hecke_cosets import combine_reps, degree, divisor_types, hecke_generator, lemma12_reps, right_coset_reps
from normal_forms import DivisorType, rank_mod_p
from oracle import (
    DEFAULT_MEMORY_BUDGET,
    ModMatrix,
    coset_distinctness,
    degree_oracle,
    double_coset_membership,
    estimate_closure_bytes,
    group_closure,
    group_order_formula,
    is_in_gamma,
    random_translate,
    surjectivity_check,
)
from symplectic_core import MatQ, Similitude, generators, omega

SLOW = os.getenv("GSP4_SLOW_TESTS") == "1"


class TestModMatrix(unittest.TestCase):
    def test_reduction(self):
        mm = ModMatrix(5, tuple([-1] * 16))
        self.assertEqual(mm.entries, tuple([4] * 16))
        self.assertEqual(mm, ModMatrix(5, tuple([9] * 16)))

    def test_encoding_injective(self):
        a = ModMatrix.of(MatQ.identity(4), 7)
        b = ModMatrix.of(omega(4), 7)
        self.assertNotEqual(a.encode(), b.encode())
        self.assertEqual(a.encode(), ModMatrix.of(MatQ.identity(4).scale(8), 7).encode())

    def test_rejects(self):
        with self.assertRaises(DomainError):
            ModMatrix(1, tuple([0] * 16))
        with self.assertRaises(DomainError):
            ModMatrix(5, (1, 2, 3))


class TestClosure(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.mod2 = group_closure(generators(2), 2)
        cls.mod3 = group_closure(generators(2), 3)

    def test_orders(self):
        self.assertEqual(self.mod2.order, 720)
        self.assertEqual(self.mod3.order, 51840)

    def test_formula(self):
        self.assertEqual(group_order_formula(2), 720)
        self.assertEqual(group_order_formula(3), 51840)
        self.assertEqual(group_order_formula(4), 737280)
        self.assertEqual(group_order_formula(6), 720 * 51840)
        self.assertEqual(group_order_formula(9), 51840 * 3 ** 10)

    def test_membership(self):
        self.assertIn(omega(4), self.mod3)
        self.assertIn(MatQ.diag(2, 1, 2, 1), self.mod3)
        self.assertNotIn(MatQ.diag(2, 1, 1, 1), self.mod3)

    def test_matrices_cover_the_group(self):
        total = sum(len(block) for block in self.mod2.matrices(chunk=100))
        self.assertEqual(total, 720)
        first = next(self.mod2.matrices())
        J = np.array(omega(4).to_int_rows(), dtype=np.int64)
        for X in first[:20]:
            self.assertTrue(np.array_equal((X.T @ J @ X) % 2, J % 2))

    def test_rejects_non_symplectic_generator(self):
        with self.assertRaises(DomainError):
            group_closure([MatQ.diag(1, 1, 2, 2)], 3)

    def test_surjective_mod_2(self):
        res = surjectivity_check(2)
        self.assertTrue(res.surjective)
        self.assertIsNone(res.crt_consistent)
        self.assertEqual(res.to_dict()["formula_order"], 720)

    @unittest.skipUnless(SLOW, "set GSP4_SLOW_TESTS=1 to run")
    def test_mod_4(self):
        self.assertEqual(group_closure(generators(2), 4).order, 720 * 2 ** 10)
        self.assertTrue(surjectivity_check(4).surjective)

    @unittest.skipUnless(SLOW, "set GSP4_SLOW_TESTS=1 to run")
    def test_mod_6_crt(self):
        res = surjectivity_check(6)
        self.assertTrue(res.surjective)
        self.assertTrue(res.crt_consistent)


class TestBudget(unittest.TestCase):
    def test_estimate(self):
        self.assertGreater(estimate_closure_bytes(9), DEFAULT_MEMORY_BUDGET)
        self.assertLess(estimate_closure_bytes(3), DEFAULT_MEMORY_BUDGET)

    def test_mod_9_over_budget(self):
        with self.assertRaises(ResourceBudgetError) as ctx:
            group_closure(generators(2), 9)
        self.assertEqual(ctx.exception.budget_bytes, DEFAULT_MEMORY_BUDGET)
        self.assertGreater(ctx.exception.needed_bytes, ctx.exception.budget_bytes)

    def test_small_budget(self):
        with self.assertRaises(ResourceBudgetError):
            group_closure(generators(2), 2, budget_bytes=1000)


class TestDegreeOracle(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.mod2 = group_closure(generators(2), 2)
        cls.mod3 = group_closure(generators(2), 3)

    def test_examples(self):
        self.assertEqual(degree_oracle((0, 0, 1, 1), 2, 1, closure=self.mod2), 15)
        self.assertEqual(degree_oracle((1, 1, 1, 1), 2, 1, closure=self.mod2), 1)
        self.assertEqual(degree_oracle(DivisorType(1, 1, 3, 3), 3, 1, closure=self.mod3), 40)

    def test_agrees_with_enumeration(self):
        for p, grp in ((2, self.mod2), (3, self.mod3)):
            for dt in divisor_types(p, 1):
                self.assertEqual(degree_oracle(dt, p, 1, closure=grp), degree(dt))
                self.assertEqual(degree_oracle(dt, p, 1, closure=grp), len(right_coset_reps(dt)))

    def test_rejects(self):
        with self.assertRaises(DomainError):
            degree_oracle((0, 0, 2, 2), 2, 1, closure=self.mod2)
        with self.assertRaises(DomainError):
            degree_oracle((0, 0, 1), 2, 1, closure=self.mod2)

    @unittest.skipUnless(SLOW, "set GSP4_SLOW_TESTS=1 to run")
    def test_level_two(self):
        mod4 = group_closure(generators(2), 4)
        self.assertEqual(degree_oracle((0, 1, 2, 1), 2, 2, closure=mod4), 30)
        for dt in divisor_types(2, 2):
            self.assertEqual(degree_oracle(dt, 2, 2, closure=mod4), degree(dt))


class TestDistinctness(unittest.TestCase):
    def test_lemma12_list(self):
        res = coset_distinctness(lemma12_reps(2, "g1"))
        self.assertTrue(res.distinct)
        self.assertEqual(res.count, 15)

    def test_duplicate(self):
        reps = lemma12_reps(2, "g1")
        res = coset_distinctness(reps + [reps[0]])
        self.assertFalse(res)
        self.assertEqual(res.first_violation, (0, 15))
        self.assertEqual(res.to_dict()["first_violation"], [0, 15])

    def test_same_coset_translate(self):
        rep = lemma12_reps(3, "g1")[5]
        moved = Similitude(omega(4), 1) @ Similitude.of(rep)
        self.assertFalse(coset_distinctness([rep, moved]).distinct)

    def test_combined_list(self):
        both = combine_reps(right_coset_reps(DivisorType(1, 1, 2, 2)), right_coset_reps(DivisorType(1, 1, 3, 3)))
        self.assertTrue(coset_distinctness(both).distinct)

    def test_mixed_multipliers(self):
        with self.assertRaises(DomainError):
            coset_distinctness([MatQ.identity(4), MatQ.diag(1, 1, 2, 2)])

    def test_trivial_lists(self):
        self.assertTrue(coset_distinctness([]).distinct)
        self.assertTrue(coset_distinctness([MatQ.identity(4)]).distinct)


class TestMembership(unittest.TestCase):
    def test_g3_reps(self):
        dt = DivisorType(1, 2, 2, 4)
        for M in lemma12_reps(2, "g3"):
            self.assertTrue(double_coset_membership(M, dt))
            self.assertEqual(rank_mod_p(M, 2), 1)

    def test_other_type(self):
        self.assertFalse(double_coset_membership(MatQ.diag(1, 1, 4, 4), DivisorType(1, 2, 2, 4)))
        self.assertTrue(double_coset_membership(MatQ.diag(2, 2, 2, 2), DivisorType(2, 2, 2, 2)))

    def test_random_translates(self):
        rng = np.random.default_rng(5)
        g3 = hecke_generator(3, "g3")
        for _ in range(5):
            self.assertTrue(double_coset_membership(random_translate(g3, rng), DivisorType(1, 3, 3, 9)))

    def test_multiplier_mismatch(self):
        with self.assertRaises(DomainError):
            double_coset_membership(hecke_generator(2, "g1"), DivisorType(1, 2, 2, 4))

    def test_is_in_gamma(self):
        self.assertTrue(is_in_gamma(omega(4)))
        self.assertFalse(is_in_gamma(MatQ.diag(1, 1, 2, 2)))
        self.assertFalse(is_in_gamma(MatQ.diag(2, 2, 2, 2)))


if __name__ == "__main__":
    unittest.main()
