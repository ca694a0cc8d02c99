"""
Job-offer market simulation.

Employers hold one position each and make one offer per round. A candidate
takes the first offer that reaches it and declines everything after.
Vacancy is the share of employers still unfilled (or candidates still
jobless) after each offer round.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from core import ValidationError

logger = logging.getLogger(__name__)


class EmployerClass(str, Enum):
    HIGH = 'high'
    MEDIUM = 'medium'
    LOW = 'low'


class PlanMode(str, Enum):
    REAL_WORLD = 'real_world'
    FROM_MATCHES = 'from_matches'


def assign_classes(m):
    """First floor(m/3) employers High, next floor(m/3) Medium, the rest Low."""
    if m < 1:
        raise ValidationError(f"Need at least one employer, got {m}")
    third = m // 3
    return [EmployerClass.HIGH] * third + [EmployerClass.MEDIUM] * third + [EmployerClass.LOW] * (m - 2 * third)


def class_offer_sequence(pref_row, cls):
    """
    Candidates an employer of the given class makes offers to, in order.

    Medium employers skip the top floor(L/3) of their row and Low employers
    the top floor(2L/3), L being the employer's own row length.
    """
    cls = EmployerClass(cls)
    length = len(pref_row)
    if cls is EmployerClass.MEDIUM:
        return list(pref_row[length // 3:])
    if cls is EmployerClass.LOW:
        return list(pref_row[2 * length // 3:])
    return list(pref_row)


class OfferPlan:
    """Ordered candidates one employer offers to, with a forward-only cursor."""

    def __init__(self, candidates):
        self.candidates = [int(c) for c in candidates if c >= 0]
        self.cursor = 0

    def __len__(self):
        return len(self.candidates)

    def exhausted(self):
        return self.cursor >= len(self.candidates)

    def advance(self):
        """Return the next candidate to receive an offer, or None once exhausted."""
        if self.exhausted():
            return None
        candidate = self.candidates[self.cursor]
        self.cursor += 1
        return candidate


@dataclass(frozen=True)
class OfferEvent:
    round: int
    employer: int
    candidate: int
    accepted: bool


@dataclass
class VacancyReport:
    """
    Attributes:
        employer_vacancy: Unfilled employers / m after each round
        candidate_vacancy: Jobless candidates / n after each round
        offers: Every OfferEvent in the order it was processed
    """
    employer_vacancy: list = field(default_factory=list)
    candidate_vacancy: list = field(default_factory=list)
    offers: list = field(default_factory=list)

    @property
    def rounds(self):
        return len(self.employer_vacancy)

    @property
    def acceptances(self):
        return [event for event in self.offers if event.accepted]

    def hired(self):
        """Return {employer: candidate} for every accepted offer."""
        return {event.employer: event.candidate for event in self.acceptances}


def build_plans(mode, source, classes=None):
    """
    Build one OfferPlan per employer.

    Args:
        mode: PlanMode.REAL_WORLD takes the employer PreferenceTable and
            applies the class skip rule; PlanMode.FROM_MATCHES takes the
            employer SideMatches and offers down the match row
        source: Employer PreferenceTable or SideMatches, per mode
        classes: EmployerClass per employer (REAL_WORLD only; defaults to
            assign_classes over the employer count)

    Returns:
        List of OfferPlan, indexed by employer
    """
    mode = PlanMode(mode)
    if mode is PlanMode.REAL_WORLD:
        if classes is None:
            classes = assign_classes(source.agent_count)
        if len(classes) != source.agent_count:
            raise ValidationError(f"{len(classes)} classes given for {source.agent_count} employers")
        return [OfferPlan(class_offer_sequence(row, cls)) for row, cls in zip(source.rows, classes)]
    # sentinels are negative and OfferPlan drops them
    return [OfferPlan(row) for row in source.rows]


def simulate_market(plans, candidate_count, rounds=3):
    """
    Run the offer rounds.

    Every unfilled employer, in ascending index, offers to the next
    candidate on its plan. Filled employers and exhausted plans sit out.

    Args:
        plans: OfferPlan per employer; their cursors are advanced
        candidate_count: Number of candidates in the market
        rounds: Number of offer rounds

    Returns:
        VacancyReport
    """
    if rounds < 1:
        raise ValidationError(f"Simulation needs at least one round, got {rounds}")
    if candidate_count < 1:
        raise ValidationError(f"Need at least one candidate, got {candidate_count}")
    m = len(plans)
    if m < 1:
        raise ValidationError("Simulation needs at least one employer")

    filled = [False] * m
    employed = [False] * candidate_count
    report = VacancyReport()

    for r in range(rounds):
        for employer, plan in enumerate(plans):
            if filled[employer]:
                continue
            candidate = plan.advance()
            if candidate is None:
                continue
            if candidate >= candidate_count:
                raise ValidationError(f"Employer {employer + 1} plans an offer to unknown candidate {candidate + 1}")
            accepted = not employed[candidate]
            if accepted:
                employed[candidate] = True
                filled[employer] = True
            report.offers.append(OfferEvent(r, employer, candidate, accepted))
            logger.debug(f"Round {r + 1}: E{employer + 1} -> C{candidate + 1} {'accepted' if accepted else 'declined'}")

        report.employer_vacancy.append(Fraction(filled.count(False), m))
        report.candidate_vacancy.append(Fraction(employed.count(False), candidate_count))
        logger.info(
            f"Offer round {r + 1}: employer vacancy {float(report.employer_vacancy[-1]):.2%}, "
            f"candidate vacancy {float(report.candidate_vacancy[-1]):.2%}"
        )
    return report
