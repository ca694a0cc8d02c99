"""
Mixed MMDAA: keep every Normal MMDAA match and patch withheld rounds with
LMF-MMDAA substitutes.

Each side is filled on its own, agent by agent in ascending index. A
substitute must be new to the agent and unused by any other agent of the
same side in that round. Departed rounds are left alone. Substitutes come
from every LMF round, including those past the Normal horizon.
"""

import logging

from core import NONE, MultiMatching, Provenance, SideMatches, ValidationError
from lmf import lmf_mmdaa
from mmdaa import UNCAPPED_ROUNDS, MmdaaConfig, normal_mmdaa

logger = logging.getLogger(__name__)


class RoundOccupancy:
    """Counterparts already assigned per round on the side being filled."""

    def __init__(self, round_count):
        self.taken = [set() for _ in range(round_count)]

    @classmethod
    def seeded_from(cls, side_matches):
        occ = cls(side_matches.round_count)
        for row in side_matches.rows:
            for r, cp in enumerate(row):
                if cp >= 0:
                    occ.claim(r, cp)
        return occ

    def is_taken(self, round_index, counterpart):
        return counterpart in self.taken[round_index]

    def claim(self, round_index, counterpart):
        if counterpart in self.taken[round_index]:
            raise ValidationError(f"Counterpart {counterpart + 1} already assigned in round {round_index + 1}")
        self.taken[round_index].add(counterpart)


def fill_no_matches(normal_row, lmf_row, occ, normal_provenance=None):
    """
    Replace each withheld cell of one agent's Normal sequence.

    The substitute is the earliest LMF entry that the agent does not already
    hold in any round and that no other agent holds in this round.

    Args:
        normal_row: The agent's Normal MMDAA cells
        lmf_row: The agent's LMF-MMDAA cells (any length)
        occ: RoundOccupancy for this side; updated with every fill
        normal_provenance: Provenance of normal_row (all Stated by default)

    Returns:
        Tuple (filled cells, provenance) with fills tagged Inferred
    """
    filled = list(normal_row)
    provenance = list(normal_provenance or [Provenance.STATED] * len(filled))
    substitutes = [cp for cp in lmf_row if cp >= 0]

    for r, cell in enumerate(filled):
        if cell != NONE:
            continue
        held = set(cp for cp in filled if cp >= 0)
        for cp in substitutes:
            if cp in held or occ.is_taken(r, cp):
                continue
            filled[r] = cp
            provenance[r] = Provenance.INFERRED
            occ.claim(r, cp)
            logger.debug(f"Round {r + 1} filled with counterpart {cp + 1}")
            break
    return tuple(filled), tuple(provenance)


def _fill_side(normal, lmf):
    if normal.agent_count != lmf.agent_count or normal.counterpart_count != lmf.counterpart_count:
        raise ValidationError(
            f"{normal.side.name} tables disagree: Normal {normal.agent_count}x{normal.counterpart_count}, "
            f"LMF {lmf.agent_count}x{lmf.counterpart_count}"
        )
    occ = RoundOccupancy.seeded_from(normal)
    rows, prov = [], []
    for agent in range(normal.agent_count):
        row, tags = fill_no_matches(normal.rows[agent], lmf.rows[agent], occ, normal.provenance[agent])
        rows.append(row)
        prov.append(tags)

    before = sum(normal.none_count(r) for r in range(normal.round_count))
    filled = SideMatches(normal.side, tuple(rows), tuple(prov), normal.counterpart_count)
    after = sum(filled.none_count(r) for r in range(filled.round_count))
    logger.info(f"Mixed {normal.side.name}: filled {before - after} of {before} withheld cells")
    return filled


def mixed_mmdaa(norm_cand, lmf_cand, norm_emp, lmf_emp):
    """
    Overlay LMF-MMDAA substitutes onto Normal MMDAA withholdings, per side.

    The filled candidate and employer tables are each one-to-one per round
    but need not describe the same bipartite matching.

    Returns:
        MultiMatching holding the two filled side tables
    """
    if norm_cand.agent_count != norm_emp.counterpart_count or norm_emp.agent_count != norm_cand.counterpart_count:
        raise ValidationError("Normal candidate and employer tables come from different markets")
    return MultiMatching(_fill_side(norm_cand, lmf_cand), _fill_side(norm_emp, lmf_emp), label='mixed')


def mixed_from_runs(normal, lmf):
    """Convenience wrapper taking the two MultiMatching runs."""
    return mixed_mmdaa(normal.candidates, lmf.candidates, normal.employers, lmf.employers)


def substitute_run(cand_prefs, emp_prefs, lcfg=None, dense=None):
    """LMF-MMDAA run until the dense tables are exhausted, so each agent ranks every counterpart once."""
    return lmf_mmdaa(cand_prefs, emp_prefs, MmdaaConfig(UNCAPPED_ROUNDS), lcfg, dense)


def mixed_from_market(cand_prefs, emp_prefs, mcfg=None, lcfg=None, dense=None):
    """
    Run Normal MMDAA for mcfg.max_rounds and fill it from a full LMF-MMDAA run.

    Args:
        cand_prefs: Stated candidate PreferenceTable
        emp_prefs: Stated employer PreferenceTable
        mcfg: MmdaaConfig for the Normal run; the result has its horizon
        lcfg: LmfConfig, used when dense is not given
        dense: Precomputed DenseMarket for these tables, if any

    Returns:
        Mixed MultiMatching
    """
    normal = normal_mmdaa(cand_prefs, emp_prefs, mcfg)
    return mixed_from_runs(normal, substitute_run(cand_prefs, emp_prefs, lcfg, dense))
