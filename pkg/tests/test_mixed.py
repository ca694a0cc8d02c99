"""
Unit tests for Mixed MMDAA

Tests cover:
- The worked example fills
- Substitute selection rules in fill_no_matches
- Preservation of Normal matches, per-round one-to-one and withholding
  reduction on generated markets
- Substitutes drawn from LMF rounds past the Normal horizon
- Withholdings left on balanced and surplus-candidate markets
"""

import unittest
import sys
import os

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from core import DEPARTED, NONE, PreferenceTable, Provenance, Side, ValidationError
from datagen import MarketSpec, generate_market
from lmf import DenseMarket, LmfConfig, densify_market, lmf_mmdaa
from mixed import RoundOccupancy, fill_no_matches, mixed_from_market, mixed_from_runs, mixed_mmdaa, substitute_run
from mmdaa import MmdaaConfig, normal_mmdaa
from market_samples import S, I, lmf_result, normal_result


class TestRoundOccupancy(unittest.TestCase):
    """Test cases for RoundOccupancy."""

    def test_seeded_from_normal(self):
        """Test that seeding marks every Normal match."""
        occ = RoundOccupancy.seeded_from(normal_result().candidates)
        self.assertEqual(occ.taken, [{0, 1, 2}, {0}, {0, 2}])

    def test_double_claim(self):
        """Test that a counterpart cannot be claimed twice in one round."""
        occ = RoundOccupancy(2)
        occ.claim(0, 3)
        occ.claim(1, 3)
        with self.assertRaises(ValidationError):
            occ.claim(0, 3)


class TestFillNoMatches(unittest.TestCase):
    """Test cases for fill_no_matches."""

    def test_taken_substitute_skipped(self):
        """Test that a withheld round stays withheld when its only substitute is taken."""
        occ = RoundOccupancy(1)
        occ.claim(0, 0)
        self.assertEqual(fill_no_matches((NONE,), (0,), occ), ((NONE,), (S,)))

    def test_held_substitute_skipped(self):
        """Test that a counterpart the agent holds in another round is not reused."""
        occ = RoundOccupancy(2)
        occ.claim(1, 1)
        cells, prov = fill_no_matches((NONE, 1), (1, 2), occ)
        self.assertEqual(cells, (2, 1))
        self.assertEqual(prov, (I, S))
        self.assertTrue(occ.is_taken(0, 2))

    def test_departed_left_alone(self):
        """Test that departed rounds are never filled."""
        occ = RoundOccupancy(3)
        cells, _ = fill_no_matches((0, DEPARTED, DEPARTED), (0, 1, 2), occ)
        self.assertEqual(cells, (0, DEPARTED, DEPARTED))

    def test_lmf_withholdings_ignored(self):
        """Test that NONE entries in the LMF row never become substitutes."""
        cells, _ = fill_no_matches((NONE,), (NONE, DEPARTED), RoundOccupancy(1))
        self.assertEqual(cells, (NONE,))


class TestMixedMmdaa(unittest.TestCase):
    """Test cases for mixed_mmdaa."""

    def test_worked_example(self):
        """Test the fills for c2 and e3 and that nothing else changes."""
        normal, lmf = normal_result(), lmf_result()
        mixed = mixed_from_runs(normal, lmf)
        self.assertEqual(mixed.label, 'mixed')
        self.assertEqual(mixed.candidates.rows[1], (2, 1, 0))
        self.assertEqual(mixed.candidates.provenance[1], (S, I, S))
        self.assertEqual(mixed.employers.rows[2], (1, 2, 0))
        self.assertEqual(mixed.employers.provenance[2], (S, I, S))
        for agent in (0, 2):
            self.assertEqual(mixed.candidates.rows[agent], normal.candidates.rows[agent])
        for agent in (0, 1):
            self.assertEqual(mixed.employers.rows[agent], normal.employers.rows[agent])

    def test_generated_markets(self):
        """Test Mixed invariants on generated markets with several round caps."""
        for seed in range(6):
            cand, emp = generate_market(MarketSpec(12, 9, prefs_per_candidate=3, seed=seed))
            dense = densify_market(cand, emp, LmfConfig(max_iterations=100, seed=seed))
            for cap in (2, 4, 8):
                mcfg = MmdaaConfig(cap)
                normal = normal_mmdaa(cand, emp, mcfg)
                lmf = lmf_mmdaa(cand, emp, mcfg, dense=dense)
                mixed = mixed_from_runs(normal, lmf)
                with self.subTest(seed=seed, cap=cap):
                    for n_side, m_side in ((normal.candidates, mixed.candidates),
                                           (normal.employers, mixed.employers)):
                        m_side.check_one_to_one()
                        self.assertEqual(m_side.round_count, n_side.round_count)
                        for r in range(n_side.round_count):
                            self.assertLessEqual(m_side.none_count(r), n_side.none_count(r))
                            self.assertEqual(m_side.participant_count(r), n_side.participant_count(r))
                        for n_row, m_row, tags in zip(n_side.rows, m_side.rows, m_side.provenance):
                            for n_cell, m_cell, tag in zip(n_row, m_row, tags):
                                if n_cell != NONE:
                                    self.assertEqual(m_cell, n_cell)
                                    self.assertIs(tag, Provenance.STATED)
                                elif m_cell >= 0:
                                    self.assertIs(tag, Provenance.INFERRED)

    def test_market_mismatch(self):
        """Test that Normal tables of different markets are rejected."""
        normal = normal_result()
        other = normal_mmdaa(*generate_market(MarketSpec(4, 3, prefs_per_candidate=2)))
        with self.assertRaises(ValidationError):
            mixed_mmdaa(normal.candidates, normal.candidates, other.employers, other.employers)

    def test_side_shape_mismatch(self):
        """Test that an LMF side from another market is rejected."""
        normal = normal_result()
        other = normal_mmdaa(*generate_market(MarketSpec(4, 3, prefs_per_candidate=2)))
        with self.assertRaises(ValidationError):
            mixed_mmdaa(normal.candidates, other.candidates, normal.employers, normal.employers)


def _none_cells(side, rounds):
    return sum(side.none_count(r) for r in range(min(rounds, side.round_count)))


class TestMixedFromMarket(unittest.TestCase):
    """Test cases for substitute_run and mixed_from_market."""

    def late_substitute_market(self):
        # c2 and e2 are withheld in the only Normal round; their round-1 LMF
        # partners are taken there, their round-2 LMF partners are free
        cand = PreferenceTable(Side.CANDIDATE, ((0,), (0,)), 2)
        emp = PreferenceTable(Side.EMPLOYER, ((0, 1), (1,)), 2)
        dense = DenseMarket(
            PreferenceTable(Side.CANDIDATE, ((1, 0), (0, 1)), 2),
            PreferenceTable(Side.EMPLOYER, ((0, 1), (0, 1)), 2),
            None,
            None,
        )
        return cand, emp, dense

    def test_substitute_run_exhausts_dense_tables(self):
        """Test that every agent meets every counterpart exactly once."""
        cand, emp = generate_market(MarketSpec(6, 5, prefs_per_candidate=2, seed=0))
        run = substitute_run(cand, emp, LmfConfig(max_iterations=50))
        for side, count in ((run.candidates, 5), (run.employers, 6)):
            for row in side.rows:
                matched = [cp for cp in row if cp >= 0]
                self.assertEqual(sorted(matched), list(range(count)))

    def test_fills_from_rounds_past_the_normal_horizon(self):
        """Test that a one-round Mixed run takes substitutes from LMF round 2."""
        cand, emp, dense = self.late_substitute_market()
        mcfg = MmdaaConfig(1)

        cut = mixed_from_runs(normal_mmdaa(cand, emp, mcfg), lmf_mmdaa(cand, emp, mcfg, dense=dense))
        self.assertEqual(cut.candidates.rows, ((0,), (NONE,)))
        self.assertEqual(cut.employers.rows, ((0,), (NONE,)))

        mixed = mixed_from_market(cand, emp, mcfg, dense=dense)
        self.assertEqual(mixed.round_count, 1)
        self.assertEqual(mixed.candidates.rows, ((0,), (1,)))
        self.assertEqual(mixed.employers.rows, ((0,), (1,)))
        self.assertEqual(mixed.candidates.provenance[1], (I,))
        self.assertEqual(mixed.employers.provenance[1], (I,))

    def test_balanced_market_nearly_fully_filled(self):
        """Test that 100x100 Mixed runs leave at most 2% of the first 10 rounds withheld."""
        for seed in range(3):
            cand, emp = generate_market(MarketSpec(100, 100, seed=seed))
            normal = normal_mmdaa(cand, emp, MmdaaConfig(10))
            mixed = mixed_from_market(cand, emp, MmdaaConfig(10))
            for n_side, m_side in ((normal.candidates, mixed.candidates), (normal.employers, mixed.employers)):
                with self.subTest(seed=seed, side=n_side.side):
                    for r in range(n_side.round_count):
                        self.assertLessEqual(m_side.none_count(r), n_side.none_count(r))
                    self.assertLessEqual(_none_cells(m_side, 10), 20)

    def test_surplus_candidates(self):
        """Test Mixed withholdings against Normal when candidates outnumber employers."""
        for n in (110, 150):
            cand, emp = generate_market(MarketSpec(n, 100, seed=0))
            normal = normal_mmdaa(cand, emp, MmdaaConfig(10))
            mixed = mixed_from_market(cand, emp, MmdaaConfig(10))
            with self.subTest(candidates=n):
                for n_side, m_side in ((normal.candidates, mixed.candidates), (normal.employers, mixed.employers)):
                    for r in range(n_side.round_count):
                        self.assertLessEqual(m_side.none_count(r), n_side.none_count(r))
                # at most 100 candidates hold an employer in any round
                for r in range(mixed.candidates.round_count):
                    held = sum(1 for cp in mixed.candidates.cells(r) if cp >= 0)
                    self.assertLessEqual(held, 100)


if __name__ == '__main__':
    unittest.main()
