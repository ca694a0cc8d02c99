"""
Per-round displacement, withholdings and retention for one side of a
multi-round matching. All arithmetic is exact (fractions.Fraction).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from core import DEPARTED, NONE, BookkeepingError, Provenance, ValidationError

logger = logging.getLogger(__name__)


class Consult(str, Enum):
    # Stated matches look up the stated row, Inferred ones the dense row
    PROVENANCE = 'provenance'
    # every match looks up the dense row (the LMF algorithm's own input)
    DENSE = 'dense'


@dataclass(frozen=True)
class RoundValue:
    total: Fraction
    participants: int

    @property
    def average(self):
        if self.participants == 0:
            return None
        return Fraction(self.total) / self.participants


@dataclass(frozen=True)
class MetricSeries:
    """
    Attributes:
        metric: 'displacement', 'withholdings' or 'retention'
        side: Side the series describes
        rounds: One RoundValue per matching round
    """
    metric: str
    side: object
    rounds: tuple

    @property
    def averages(self):
        return tuple(value.average for value in self.rounds)

    @property
    def totals(self):
        return tuple(value.total for value in self.rounds)

    @property
    def participants(self):
        return tuple(value.participants for value in self.rounds)

    def __len__(self):
        return len(self.rounds)

    def mean(self, rounds=None):
        """Mean of the defined per-round averages over the first `rounds` rounds."""
        defined = [a for a in self.averages[:rounds] if a is not None]
        if not defined:
            return None
        return sum(defined, Fraction(0)) / len(defined)


class PenaltyLedger:
    """Withheld-round counts since each agent's last match."""

    def __init__(self, stated_lengths, per_round=True):
        self.stated_lengths = list(stated_lengths)
        self.per_round = per_round
        self.withheld = [0] * len(self.stated_lengths)

    def record_withholding(self, agent):
        self.withheld[agent] = self.withheld[agent] + 1 if self.per_round else 1

    def settle(self, agent):
        """Return the penalty owed on this match and reset the agent's count."""
        penalty = self.withheld[agent] * self.stated_lengths[agent]
        self.withheld[agent] = 0
        return penalty


def displacement(side_matches, stated_prefs, dense_prefs=None, apply_penalties=False,
                 penalty_per_round=True, consult=Consult.PROVENANCE):
    """
    Average 0-based position of each round's match in the consulted row.

    Args:
        side_matches: SideMatches of the side being measured
        stated_prefs: That side's stated PreferenceTable
        dense_prefs: That side's densified PreferenceTable, required for
            Inferred cells or Consult.DENSE
        apply_penalties: Add withheld rounds x stated row length to the next match
        penalty_per_round: Stack one penalty per withheld round (else one per drought)
        consult: Which table each match is looked up in

    Returns:
        MetricSeries over matched agents only
    """
    consult = Consult(consult)
    if stated_prefs.agent_count != side_matches.agent_count:
        raise ValidationError(
            f"{side_matches.agent_count} agents matched but {stated_prefs.agent_count} stated rows given"
        )
    stated_rank = stated_prefs.rank_maps()
    dense_rank = dense_prefs.rank_maps() if dense_prefs is not None else None
    if consult is Consult.DENSE and dense_rank is None:
        raise ValidationError("Dense lookup requested without dense preferences")

    ledger = PenaltyLedger((len(row) for row in stated_prefs.rows), penalty_per_round)
    series = []
    for r in range(side_matches.round_count):
        total, participants = 0, 0
        for agent, row in enumerate(side_matches.rows):
            cp = row[r]
            if cp == DEPARTED:
                continue
            if cp == NONE:
                ledger.record_withholding(agent)
                continue

            inferred = side_matches.provenance[agent][r] is Provenance.INFERRED
            if consult is Consult.DENSE or inferred:
                if dense_rank is None:
                    raise BookkeepingError(f"Inferred match for agent {agent + 1} but no dense preferences given")
                ranks = dense_rank[agent]
            else:
                ranks = stated_rank[agent]
            if cp not in ranks:
                raise BookkeepingError(
                    f"{side_matches.side.name} {agent + 1} matched to {cp + 1} in round {r + 1}, "
                    f"which its consulted row does not hold"
                )
            value = ranks[cp]
            penalty = ledger.settle(agent)
            if apply_penalties:
                value += penalty
            total += value
            participants += 1
        series.append(RoundValue(Fraction(total), participants))
    return MetricSeries('displacement', side_matches.side, tuple(series))


def withholdings(side_matches, residual_participation=None):
    """
    Fraction of remaining participants left without a match, per round.

    Args:
        side_matches: SideMatches of the side being measured
        residual_participation: Optional per-round participant counts;
            derived from the non-departed cells when omitted
    """
    series = []
    for r in range(side_matches.round_count):
        participants = (
            residual_participation[r] if residual_participation is not None
            else side_matches.participant_count(r)
        )
        series.append(RoundValue(Fraction(side_matches.none_count(r)), participants))
    return MetricSeries('withholdings', side_matches.side, tuple(series))


def retention(side_matches, stated_prefs):
    """Fraction of matched agents whose match appears in their stated row, per round."""
    stated_sets = [set(row) for row in stated_prefs.rows]
    series = []
    for r in range(side_matches.round_count):
        kept, matched = 0, 0
        for agent, row in enumerate(side_matches.rows):
            if row[r] < 0:
                continue
            matched += 1
            kept += row[r] in stated_sets[agent]
        series.append(RoundValue(Fraction(kept), matched))
    return MetricSeries('retention', side_matches.side, tuple(series))
