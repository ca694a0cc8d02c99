"""
Synthetic two-attribute utility markets.

Every agent draws two N(0, 1) attributes and one of two types. Type 1
weights the first attribute twice as heavily as the second, Type 2 the
reverse. Candidates rank a random sample of employers by utility, and each
employer ranks exactly the candidates that applied to it.
"""

import logging
import re
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from core import PreferenceTable, Side, ValidationError

logger = logging.getLogger(__name__)

_SPEC_LABEL = re.compile(r'^\s*(\d+)\s*[xX×]\s*(\d+)\s*$')


class AgentType(IntEnum):
    TYPE1 = 1
    TYPE2 = 2


# attribute weights per type
WEIGHTS = {AgentType.TYPE1: (2.0, 1.0), AgentType.TYPE2: (1.0, 2.0)}


@dataclass(frozen=True)
class Agent:
    attributes: tuple
    type: AgentType

    def __post_init__(self):
        try:
            object.__setattr__(self, 'type', AgentType(self.type))
        except ValueError:
            raise ValidationError(f"Unknown agent type {self.type}") from None


def utility(evaluator, target):
    """Weighted sum of the target's attributes under the evaluator's type."""
    w1, w2 = WEIGHTS[evaluator.type]
    a1, a2 = target.attributes
    return w1 * a1 + w2 * a2


@dataclass(frozen=True)
class MarketSpec:
    """
    Attributes:
        candidates: Number of candidates n
        employers: Number of employers m
        prefs_per_candidate: Employers each candidate ranks (capped at m)
        seed: Generator seed
        home_pool_size: If set, each candidate samples only from a
            contiguous block of this many employers starting near its own
            position, which gives mostly disjoint applicant pools
    """
    candidates: int
    employers: int
    prefs_per_candidate: int = 10
    seed: int = 0
    home_pool_size: int = None

    def __post_init__(self):
        if self.candidates < 1 or self.employers < 1:
            raise ValidationError(f"Market needs at least one agent per side, got {self.label}")
        if self.prefs_per_candidate < 1:
            raise ValidationError(f"prefs_per_candidate must be positive, got {self.prefs_per_candidate}")
        if self.home_pool_size is not None and not 1 <= self.home_pool_size <= self.employers:
            raise ValidationError(f"home_pool_size must lie in [1, {self.employers}], got {self.home_pool_size}")

    @property
    def label(self):
        return f"{self.candidates}x{self.employers}"

    @classmethod
    def parse(cls, text, **kwargs):
        """Build a spec from an 'NxM' label such as '100x100'."""
        match = _SPEC_LABEL.match(str(text))
        if not match:
            raise ValidationError(f"Market spec must look like NxM, got {text!r}")
        return cls(int(match.group(1)), int(match.group(2)), **kwargs)

    def with_seed(self, seed):
        return MarketSpec(self.candidates, self.employers, self.prefs_per_candidate, seed, self.home_pool_size)

    def metadata(self):
        return {
            'label': self.label,
            'candidates': self.candidates,
            'employers': self.employers,
            'prefs_per_candidate': self.prefs_per_candidate,
            'home_pool_size': self.home_pool_size,
            'seed': self.seed,
        }


def proxy_spec(seed=0):
    """Surplus-candidate market shaped like a small real job board: 75 candidates, 24 employers."""
    return MarketSpec(75, 24, prefs_per_candidate=4, seed=seed, home_pool_size=8)


def generate_agents(count, rng):
    attributes = rng.standard_normal((count, 2))
    types = rng.integers(AgentType.TYPE1, AgentType.TYPE2 + 1, size=count)
    return [Agent((float(a1), float(a2)), int(t)) for (a1, a2), t in zip(attributes, types)]


def _rank_by_utility(evaluator, pool, targets):
    # descending utility, ties by ascending index
    pool = np.asarray(pool, dtype=int)
    scores = np.array([utility(evaluator, targets[j]) for j in pool])
    order = np.lexsort((pool, -scores))
    return tuple(int(j) for j in pool[order])


def _candidate_pool(spec, candidate):
    if spec.home_pool_size is None:
        return np.arange(spec.employers)
    start = candidate * spec.employers // spec.candidates
    return (start + np.arange(spec.home_pool_size)) % spec.employers


def generate_market(spec):
    """
    Generate the candidate and employer preference tables for a spec.

    Returns:
        Tuple (cand_prefs, emp_prefs); employers with no applicants get
        empty rows
    """
    rng = np.random.default_rng(spec.seed)
    candidates = generate_agents(spec.candidates, rng)
    employers = generate_agents(spec.employers, rng)

    cand_rows = []
    applicants = [[] for _ in range(spec.employers)]
    for c, agent in enumerate(candidates):
        pool = _candidate_pool(spec, c)
        k = min(spec.prefs_per_candidate, len(pool))
        sample = rng.choice(pool, size=k, replace=False)
        row = _rank_by_utility(agent, sample, employers)
        cand_rows.append(row)
        for e in row:
            applicants[e].append(c)

    emp_rows = [_rank_by_utility(agent, applicants[e], candidates) for e, agent in enumerate(employers)]
    idle = sum(1 for row in emp_rows if not row)
    logger.info(f"Generated {spec.label} market (seed {spec.seed}): {idle} employers without applicants")
    return (
        PreferenceTable(Side.CANDIDATE, tuple(cand_rows), spec.employers),
        PreferenceTable(Side.EMPLOYER, tuple(emp_rows), spec.candidates),
    )
