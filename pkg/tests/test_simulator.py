"""
Unit tests for the job-offer simulation

Tests cover:
- Employer classes and the class skip rule
- The 10-employer, 14-candidate offer example round by round
- Offer plans built from match sequences
- Vacancy bounds on generated markets for every plan source
"""

import unittest
import sys
import os
from fractions import Fraction

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from core import DEPARTED, NONE, Side, SideMatches, ValidationError
from datagen import MarketSpec, generate_market
from lmf import LmfConfig, densify_market, lmf_mmdaa
from mixed import mixed_from_market
from mmdaa import MmdaaConfig, normal_mmdaa
from simulator import (
    EmployerClass, OfferEvent, OfferPlan, PlanMode, assign_classes, build_plans,
    class_offer_sequence, simulate_market,
)
from market_samples import S, lmf_result, offer_table

F = Fraction


class TestClasses(unittest.TestCase):
    """Test cases for assign_classes and class_offer_sequence."""

    def test_thirds(self):
        """Test that the leftover employers go to Low."""
        classes = assign_classes(10)
        self.assertEqual(classes.count(EmployerClass.HIGH), 3)
        self.assertEqual(classes.count(EmployerClass.MEDIUM), 3)
        self.assertEqual(classes.count(EmployerClass.LOW), 4)
        self.assertEqual(classes[:3], [EmployerClass.HIGH] * 3)

    def test_tiny_market(self):
        """Test that fewer than three employers are all Low."""
        self.assertEqual(assign_classes(2), [EmployerClass.LOW, EmployerClass.LOW])

    def test_no_employers(self):
        """Test that zero employers is rejected."""
        with self.assertRaises(ValidationError):
            assign_classes(0)

    def test_skip_rule(self):
        """Test the skipped prefix for each class on an 11- and a 14-entry row."""
        row = tuple(range(11))
        self.assertEqual(class_offer_sequence(row, EmployerClass.HIGH), list(row))
        self.assertEqual(class_offer_sequence(row, EmployerClass.MEDIUM), list(range(3, 11)))
        self.assertEqual(class_offer_sequence(row, 'low'), list(range(7, 11)))
        self.assertEqual(class_offer_sequence(tuple(range(14)), EmployerClass.LOW), list(range(9, 14)))

    def test_short_rows(self):
        """Test that rows shorter than three lose nothing."""
        self.assertEqual(class_offer_sequence((4, 5), EmployerClass.MEDIUM), [4, 5])
        self.assertEqual(class_offer_sequence((), EmployerClass.LOW), [])


class TestOfferPlan(unittest.TestCase):
    """Test cases for OfferPlan."""

    def test_cursor(self):
        """Test advancing to exhaustion."""
        plan = OfferPlan([NONE, 4, DEPARTED, 2])
        self.assertEqual(len(plan), 2)
        self.assertEqual(plan.advance(), 4)
        self.assertEqual(plan.advance(), 2)
        self.assertTrue(plan.exhausted())
        self.assertIsNone(plan.advance())


class TestSimulateMarket(unittest.TestCase):
    """Test cases for simulate_market."""

    def setUp(self):
        """Set up the offer example."""
        self.table = offer_table()

    def run_example(self):
        return simulate_market(build_plans(PlanMode.REAL_WORLD, self.table), 14, rounds=3)

    def test_vacancy(self):
        """Test the per-round vacancy of the offer example."""
        report = self.run_example()
        self.assertEqual(report.rounds, 3)
        self.assertEqual(report.employer_vacancy, [F(3, 10), F(0), F(0)])
        self.assertEqual(report.candidate_vacancy, [F(1, 2), F(2, 7), F(2, 7)])

    def test_first_round_events(self):
        """Test the ten first-round offers in employer order."""
        report = self.run_example()
        first = [(e.employer + 1, e.candidate + 1, e.accepted) for e in report.offers if e.round == 0]
        self.assertEqual(first, [
            (1, 2, True), (2, 3, True), (3, 12, True), (4, 2, False), (5, 7, True),
            (6, 10, True), (7, 2, False), (8, 10, False), (9, 6, True), (10, 14, True),
        ])

    def test_second_round_fills_the_rest(self):
        """Test that the three declined employers hire in round 2 and round 3 is idle."""
        report = self.run_example()
        second = [e for e in report.offers if e.round == 1]
        self.assertEqual(second, [OfferEvent(1, 3, 7, True), OfferEvent(1, 6, 4, True), OfferEvent(1, 7, 10, True)])
        self.assertFalse(any(e.round == 2 for e in report.offers))
        self.assertEqual(len(report.hired()), 10)
        self.assertEqual(len(set(report.hired().values())), 10)

    def test_deterministic(self):
        """Test that fresh plans give identical reports."""
        self.assertEqual(self.run_example(), self.run_example())

    def test_from_matches(self):
        """Test that match sequences become offer plans with sentinels dropped."""
        employers = SideMatches(Side.EMPLOYER, ((NONE, 1), (0, DEPARTED)), ((S, S), (S, S)), 2)
        plans = build_plans(PlanMode.FROM_MATCHES, employers)
        self.assertEqual([plan.candidates for plan in plans], [[1], [0]])
        report = simulate_market(plans, 2, rounds=2)
        self.assertEqual(report.employer_vacancy, [F(0), F(0)])

    def test_plan_with_only_withholdings(self):
        """Test that an employer with nothing to offer stays vacant."""
        employers = SideMatches(Side.EMPLOYER, ((NONE, NONE), (0, NONE)), ((S, S), (S, S)), 1)
        report = simulate_market(build_plans(PlanMode.FROM_MATCHES, employers), 1, rounds=2)
        self.assertEqual(report.employer_vacancy, [F(1, 2), F(1, 2)])
        self.assertEqual(report.candidate_vacancy, [F(0), F(0)])

    def test_lmf_example_leaves_no_vacancy(self):
        """Test that distinct first-round partners fill everyone at once."""
        report = simulate_market(build_plans(PlanMode.FROM_MATCHES, lmf_result().employers), 3)
        self.assertEqual(report.employer_vacancy, [F(0)] * 3)
        self.assertEqual(report.candidate_vacancy, [F(0)] * 3)

    def test_invalid_arguments(self):
        """Test rounds, class count and candidate range checks."""
        with self.assertRaises(ValidationError):
            simulate_market(build_plans(PlanMode.REAL_WORLD, self.table), 14, rounds=0)
        with self.assertRaises(ValidationError):
            simulate_market([], 14)
        with self.assertRaises(ValidationError):
            build_plans(PlanMode.REAL_WORLD, self.table, [EmployerClass.HIGH])
        with self.assertRaises(ValidationError):
            simulate_market([OfferPlan([5])], 3)

    def test_hires_balance(self):
        """Test that filled employers always equal employed candidates."""
        for seed in range(5):
            cand, emp = generate_market(MarketSpec(40, 25, prefs_per_candidate=6, seed=seed))
            report = simulate_market(build_plans(PlanMode.REAL_WORLD, emp), cand.agent_count, rounds=4)
            for ev, cv in zip(report.employer_vacancy, report.candidate_vacancy):
                self.assertEqual((1 - ev) * 25, (1 - cv) * 40)

    def employer_sources(self, cand, emp):
        """Employer rows for every plan source: raw preferences and each algorithm's matches."""
        dense = densify_market(cand, emp, LmfConfig(max_iterations=50))
        mcfg = MmdaaConfig(3)
        return {
            'real_world': (PlanMode.REAL_WORLD, emp),
            'normal': (PlanMode.FROM_MATCHES, normal_mmdaa(cand, emp, mcfg).employers),
            'lmf': (PlanMode.FROM_MATCHES, lmf_mmdaa(cand, emp, mcfg, dense=dense).employers),
            'mixed': (PlanMode.FROM_MATCHES, mixed_from_market(cand, emp, mcfg, dense=dense).employers),
        }

    def test_surplus_candidates_stay_jobless(self):
        """Test that 150 candidates for 100 employers leave at least a third jobless."""
        cand, emp = generate_market(MarketSpec(150, 100, seed=1))
        for name, (mode, source) in self.employer_sources(cand, emp).items():
            report = simulate_market(build_plans(mode, source), cand.agent_count)
            with self.subTest(source=name):
                self.assertTrue(all(cv >= F(1, 3) for cv in report.candidate_vacancy))

    def test_matched_candidates_all_hired(self):
        """Test that match sequences employ every candidate in round 1 when employers abound."""
        cand, emp = generate_market(MarketSpec(10, 100, seed=0))
        sources = self.employer_sources(cand, emp)
        del sources['real_world']
        for name, (mode, source) in sources.items():
            report = simulate_market(build_plans(mode, source), cand.agent_count)
            with self.subTest(source=name):
                self.assertEqual(report.candidate_vacancy, [F(0)] * 3)


if __name__ == '__main__':
    unittest.main()
