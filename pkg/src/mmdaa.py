"""
Normal multi-match deferred acceptance.

Each round runs deferred acceptance on the residual tables, then deletes
every matched pair from both sides before the next round.
"""

import logging
from dataclasses import dataclass

from core import (
    DEPARTED, NONE, MultiMatching, Provenance, SideMatches, ValidationError,
    require_market,
)
from daa import DaaConfig, run_deferred_acceptance

logger = logging.getLogger(__name__)

# effectively uncapped; an instance runs out of entries long before this
UNCAPPED_ROUNDS = 100_000


@dataclass(frozen=True)
class MmdaaConfig:
    """
    Attributes:
        max_rounds: Maximum number of matching rounds to produce
    """
    max_rounds: int = 5

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValidationError(f"max_rounds must be at least 1, got {self.max_rounds}")


def _has_mutual_entry(cand_prefs, emp_prefs):
    emp_sets = [set(row) for row in emp_prefs.rows]
    return any(c in emp_sets[e] for c, row in enumerate(cand_prefs.rows) for e in row)


def _record_round(cells, residual, partners, round_index):
    for agent, row in enumerate(residual.rows):
        if agent in partners:
            cells[agent].append(partners[agent])
        elif round_index > 0 and not row:
            cells[agent].append(DEPARTED)
        else:
            cells[agent].append(NONE)


def normal_mmdaa(cand_prefs, emp_prefs, cfg=None):
    """
    Produce up to cfg.max_rounds stable rounds from the stated preferences.

    An agent left without a partner while it still holds entries is withheld
    (NONE). From round 2 on, an agent whose residual row is empty at the
    start of the round is departed and stays departed.

    The run ends early, with a warning, once no residual entry is mutually
    acceptable: every further round would be all NONE or departed, so the
    result may hold fewer than cfg.max_rounds rounds even while entries
    remain.

    Args:
        cand_prefs: Candidate PreferenceTable
        emp_prefs: Employer PreferenceTable
        cfg: MmdaaConfig (defaults to 5 rounds)

    Returns:
        MultiMatching with every cell tagged Stated
    """
    require_market(cand_prefs, emp_prefs)
    cfg = cfg or MmdaaConfig()

    cand_cells = [[] for _ in range(cand_prefs.agent_count)]
    emp_cells = [[] for _ in range(emp_prefs.agent_count)]
    cands, emps = cand_prefs, emp_prefs
    round_index = 0

    while round_index < cfg.max_rounds and not (cands.is_empty() and emps.is_empty()):
        if not _has_mutual_entry(cands, emps):
            logger.warning(
                f"Stopping after {round_index} rounds: {cands.total_entries + emps.total_entries} "
                f"residual entries are not mutually acceptable"
            )
            break

        result = run_deferred_acceptance(cands, emps, DaaConfig.automatic(cands), validate=False)
        pairs = result.matching.pairs
        _record_round(cand_cells, cands, result.matching.candidate_partners(), round_index)
        _record_round(emp_cells, emps, result.matching.employer_partners(), round_index)

        cands = cands.remove_pairs(pairs)
        emps = emps.remove_pairs((e, c) for c, e in pairs)
        round_index += 1
        logger.debug(f"Round {round_index}: {len(pairs)} pairs, {cands.total_entries} candidate entries left")

    logger.info(f"Normal MMDAA produced {round_index} rounds")
    return _build(cand_cells, emp_cells, cand_prefs, emp_prefs, label='normal')


def _build(cand_cells, emp_cells, cand_prefs, emp_prefs, label):
    def side(table, cells):
        prov = tuple((Provenance.STATED,) * len(row) for row in cells)
        return SideMatches(table.side, tuple(tuple(row) for row in cells), prov, table.counterpart_count)

    return MultiMatching(side(cand_prefs, cand_cells), side(emp_prefs, emp_cells), label=label)


def convergence_rounds(cand_prefs, emp_prefs):
    """Number of rounds an uncapped Normal MMDAA run produces."""
    return normal_mmdaa(cand_prefs, emp_prefs, MmdaaConfig(UNCAPPED_ROUNDS)).round_count
