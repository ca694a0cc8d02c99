"""
Candidate-proposing deferred acceptance for unequal, sparse preference sets.

An employer only ever holds a candidate that appears in its own row, so a
pair can match only when both sides list each other.
"""

import heapq
import logging
from dataclasses import dataclass

from core import Matching, ProposalCapExceeded, ValidationError, require_market

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DaaConfig:
    """
    Attributes:
        proposal_cap: Upper bound on the total number of proposals
    """
    proposal_cap: int

    def __post_init__(self):
        if self.proposal_cap < 1:
            raise ValidationError(f"proposal_cap must be positive, got {self.proposal_cap}")

    @classmethod
    def automatic(cls, cand_prefs):
        # every candidate proposes to each listed employer at most once
        return cls(proposal_cap=max(1, cand_prefs.total_entries))


@dataclass(frozen=True)
class DaaResult:
    matching: Matching
    proposals: int


def run_deferred_acceptance(cand_prefs, emp_prefs, cfg=None, validate=True):
    """
    Run deferred acceptance and report how many proposals it took.

    Free candidates are served smallest index first through a min-heap, so
    the proposal trace is reproducible.

    Args:
        cand_prefs: Candidate PreferenceTable
        emp_prefs: Employer PreferenceTable
        cfg: DaaConfig; derived from cand_prefs when None
        validate: Check both tables first

    Returns:
        DaaResult with the stable matching and the proposal count
    """
    if validate:
        require_market(cand_prefs, emp_prefs)
    if cfg is None:
        cfg = DaaConfig.automatic(cand_prefs)

    emp_rank = emp_prefs.rank_maps()
    next_choice = [0] * cand_prefs.agent_count
    held_by = {}  # employer -> candidate currently engaged
    free = [c for c, row in enumerate(cand_prefs.rows) if row]
    heapq.heapify(free)
    proposals = 0

    while free:
        c = heapq.heappop(free)
        row = cand_prefs.rows[c]
        if next_choice[c] >= len(row):
            continue

        e = row[next_choice[c]]
        next_choice[c] += 1
        proposals += 1
        if proposals > cfg.proposal_cap:
            raise ProposalCapExceeded(f"Deferred acceptance exceeded its proposal cap of {cfg.proposal_cap}")

        rank = emp_rank[e].get(c)
        if rank is None:
            # e never listed c
            heapq.heappush(free, c)
            continue

        current = held_by.get(e)
        if current is None:
            held_by[e] = c
            logger.debug(f"C{c + 1} engaged to E{e + 1}")
        elif rank < emp_rank[e][current]:
            held_by[e] = c
            heapq.heappush(free, current)
            logger.debug(f"E{e + 1} drops C{current + 1} for C{c + 1}")
        else:
            heapq.heappush(free, c)

    matching = Matching(frozenset((c, e) for e, c in held_by.items()))
    logger.debug(f"Deferred acceptance matched {len(matching)} pairs with {proposals} proposals")
    return DaaResult(matching, proposals)


def deferred_acceptance(cand_prefs, emp_prefs, cfg=None):
    """Return the candidate-optimal stable Matching over mutually acceptable pairs."""
    return run_deferred_acceptance(cand_prefs, emp_prefs, cfg).matching


def find_blocking_pairs(matching, cand_prefs, emp_prefs):
    """
    Find every pair that would rather be together than with its partners.

    Args:
        matching: One-to-one Matching
        cand_prefs: Candidate PreferenceTable
        emp_prefs: Employer PreferenceTable

    Returns:
        Set of (candidate, employer) pairs that list each other and each
        either sit unmatched or strictly prefer the other to their partner
    """
    cand_partner = matching.candidate_partners()
    emp_partner = matching.employer_partners()
    emp_rank = emp_prefs.rank_maps()
    blocking = set()

    for c, row in enumerate(cand_prefs.rows):
        partner = cand_partner.get(c)
        for e in row:
            if e == partner:
                # everything after the partner is worse for c
                break
            rank = emp_rank[e].get(c)
            if rank is None:
                continue
            held = emp_partner.get(e)
            if held is None or held not in emp_rank[e] or rank < emp_rank[e][held]:
                blocking.add((c, e))
    return blocking
