"""
Core domain types for the matching engine.

Preference tables, one-round matchings and multi-round matchings are all
immutable once built. IDs are 0-based internally; the file formats in
formats.py shift them to 1-based.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

logger = logging.getLogger(__name__)

# Cell sentinels inside SideMatches rows
NONE = -1
DEPARTED = -2


class MatchingError(Exception):
    """Root of every error raised by this package."""


class ValidationError(MatchingError, ValueError):
    """Invalid table, config or dimension mismatch."""


class ProposalCapExceeded(MatchingError, RuntimeError):
    """Deferred acceptance made more proposals than its cap allows."""


class FactorizationError(MatchingError, RuntimeError):
    """Factorization could not run or diverged."""


class BookkeepingError(MatchingError, RuntimeError):
    """A recorded match disagrees with the preference rows it came from."""


class FormatError(MatchingError, ValueError):
    """Malformed CSV or JSON input."""


class ExperimentError(MatchingError, RuntimeError):
    """An experiment cell failed; the message names the cell."""


class Side(str, Enum):
    CANDIDATE = 'C'
    EMPLOYER = 'E'

    @property
    def opposite(self):
        """The other side of the market."""
        return Side.EMPLOYER if self is Side.CANDIDATE else Side.CANDIDATE


class Provenance(str, Enum):
    STATED = 'stated'
    INFERRED = 'inferred'


@dataclass(frozen=True)
class AgentId:
    side: Side
    index: int

    def __str__(self):
        return f"{self.side.value}{self.index + 1}"


@dataclass(frozen=True)
class PreferenceTable:
    """
    Ordered partial rankings held by every agent of one side.

    Attributes:
        side: Side whose agents own the rows
        rows: One tuple per agent, most preferred counterpart first
        counterpart_count: Population of the opposite side
    """
    side: Side
    rows: tuple
    counterpart_count: int

    def __post_init__(self):
        object.__setattr__(self, 'rows', tuple(tuple(int(x) for x in row) for row in self.rows))

    @classmethod
    def from_rows(cls, side, rows, counterpart_count):
        """Build a table from any iterable of rows; `side` may be the enum or its letter."""
        return cls(side=Side(side), rows=tuple(rows), counterpart_count=counterpart_count)

    @property
    def agent_count(self):
        return len(self.rows)

    @property
    def total_entries(self):
        return sum(len(row) for row in self.rows)

    @property
    def max_row_length(self):
        return max((len(row) for row in self.rows), default=0)

    def is_empty(self):
        return self.total_entries == 0

    def rank_maps(self):
        """Return one {counterpart: 0-based position} dict per agent."""
        return [{cp: pos for pos, cp in enumerate(row)} for row in self.rows]

    def rank_of(self, agent, counterpart):
        """0-based position of counterpart in agent's row, or None if unlisted."""
        try:
            return self.rows[agent].index(counterpart)
        except ValueError:
            return None

    def remove_pairs(self, pairs):
        """
        Return a copy with the given (agent, counterpart) entries removed.

        Args:
            pairs: Iterable of (agent index on this side, counterpart index)
        """
        drop = {}
        for agent, counterpart in pairs:
            drop.setdefault(agent, set()).add(counterpart)
        if not drop:
            return self
        rows = tuple(
            tuple(cp for cp in row if cp not in drop.get(agent, ()))
            for agent, row in enumerate(self.rows)
        )
        return PreferenceTable(self.side, rows, self.counterpart_count)


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple = ()

    @property
    def ok(self):
        return not self.issues

    def raise_if_failed(self, label='preference table'):
        if self.issues:
            first = '; '.join(f"{agent}: {text}" for agent, text in self.issues[:5])
            more = f" (+{len(self.issues) - 5} more)" if len(self.issues) > 5 else ''
            raise ValidationError(f"Invalid {label}: {first}{more}")


def validate_preference_table(table, counterpart_count=None):
    """
    Check a preference table for duplicates and out-of-range counterparts.

    Args:
        table: PreferenceTable to check
        counterpart_count: Population of the opposite side; defaults to the
            count recorded on the table

    Returns:
        ValidationReport listing every (AgentId, description) issue found
    """
    if counterpart_count is None:
        counterpart_count = table.counterpart_count
    issues = []
    opposite = table.side.opposite
    for agent, row in enumerate(table.rows):
        seen = set()
        agent_id = AgentId(table.side, agent)
        for cp in row:
            if not 0 <= cp < counterpart_count:
                issues.append((agent_id, f"out of range counterpart {AgentId(opposite, cp)}"))
            elif cp in seen:
                issues.append((agent_id, f"duplicate counterpart {AgentId(opposite, cp)}"))
            seen.add(cp)
    return ValidationReport(tuple(issues))


def require_market(cand_prefs, emp_prefs):
    """Raise ValidationError unless the two tables form one market."""
    if cand_prefs.side is not Side.CANDIDATE or emp_prefs.side is not Side.EMPLOYER:
        raise ValidationError(
            f"Expected candidate and employer tables, got {cand_prefs.side.name} and {emp_prefs.side.name}"
        )
    if cand_prefs.counterpart_count != emp_prefs.agent_count:
        raise ValidationError(
            f"Candidate rows reference {cand_prefs.counterpart_count} employers "
            f"but the employer table has {emp_prefs.agent_count} rows"
        )
    if emp_prefs.counterpart_count != cand_prefs.agent_count:
        raise ValidationError(
            f"Employer rows reference {emp_prefs.counterpart_count} candidates "
            f"but the candidate table has {cand_prefs.agent_count} rows"
        )
    validate_preference_table(cand_prefs).raise_if_failed('candidate preferences')
    validate_preference_table(emp_prefs).raise_if_failed('employer preferences')


@dataclass(frozen=True)
class Matching:
    """One-to-one set of (candidate, employer) pairs."""
    pairs: frozenset = frozenset()

    def __post_init__(self):
        pairs = frozenset((int(c), int(e)) for c, e in self.pairs)
        object.__setattr__(self, 'pairs', pairs)
        cands = [c for c, _ in pairs]
        emps = [e for _, e in pairs]
        if len(set(cands)) != len(cands) or len(set(emps)) != len(emps):
            raise ValidationError(f"Matching is not one-to-one: {sorted(pairs)}")

    def __len__(self):
        return len(self.pairs)

    def candidate_partners(self):
        return {c: e for c, e in self.pairs}

    def employer_partners(self):
        return {e: c for c, e in self.pairs}


@dataclass(frozen=True)
class SideMatches:
    """
    One side of a multi-round matching, stored agent-major.

    rows[agent][round] is a counterpart index, NONE (withheld that round)
    or DEPARTED (no residual preferences left, out of the algorithm).
    provenance[agent][round] tags every cell as Stated or Inferred.
    """
    side: Side
    rows: tuple
    provenance: tuple
    counterpart_count: int

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.rows)
        prov = tuple(tuple(Provenance(p) for p in row) for row in self.provenance)
        if len(rows) != len(prov) or any(len(a) != len(b) for a, b in zip(rows, prov)):
            raise ValidationError("Provenance table does not match the assignment table")
        lengths = {len(row) for row in rows}
        if len(lengths) > 1:
            raise ValidationError(f"Agents have differing round counts: {sorted(lengths)}")
        object.__setattr__(self, 'rows', rows)
        object.__setattr__(self, 'provenance', prov)

    @property
    def agent_count(self):
        return len(self.rows)

    @property
    def round_count(self):
        return len(self.rows[0]) if self.rows else 0

    def round_view(self, round_index):
        """Return {agent: counterpart} for the agents matched in the given round."""
        return {
            agent: row[round_index]
            for agent, row in enumerate(self.rows)
            if row[round_index] >= 0
        }

    def cells(self, round_index):
        """Every agent's cell in one round, sentinels included."""
        return [row[round_index] for row in self.rows]

    def none_count(self, round_index):
        return sum(1 for row in self.rows if row[round_index] == NONE)

    def participant_count(self, round_index):
        return sum(1 for row in self.rows if row[round_index] != DEPARTED)

    def truncated(self, rounds):
        """Keep only the first `rounds` rounds."""
        return SideMatches(
            self.side,
            tuple(row[:rounds] for row in self.rows),
            tuple(row[:rounds] for row in self.provenance),
            self.counterpart_count,
        )

    def check_one_to_one(self):
        """Raise ValidationError if any round or agent repeats a counterpart."""
        for r in range(self.round_count):
            taken = [cp for cp in self.cells(r) if cp >= 0]
            if len(taken) != len(set(taken)):
                raise ValidationError(f"{self.side.name} round {r + 1} repeats a counterpart")
        for agent, row in enumerate(self.rows):
            taken = [cp for cp in row if cp >= 0]
            if len(taken) != len(set(taken)):
                raise ValidationError(f"{AgentId(self.side, agent)} receives a counterpart twice")


@dataclass(frozen=True)
class MultiMatching:
    """Both sides of a multi-round matching."""
    candidates: SideMatches
    employers: SideMatches
    label: str = field(default='', compare=False)

    @property
    def round_count(self):
        return max(self.candidates.round_count, self.employers.round_count)

    def side(self, side):
        return self.candidates if Side(side) is Side.CANDIDATE else self.employers

    def round_matching(self, round_index):
        """Candidate-side view of one round as a Matching."""
        return Matching(frozenset(self.candidates.round_view(round_index).items()))

    def is_consistent(self):
        """True when c holds e in round r exactly when e holds c in round r."""
        if self.candidates.round_count != self.employers.round_count:
            return False
        for r in range(self.candidates.round_count):
            forward = self.candidates.round_view(r)
            backward = {c: e for e, c in self.employers.round_view(r).items()}
            if forward != backward:
                return False
        return True

    def truncated(self, rounds):
        return MultiMatching(self.candidates.truncated(rounds), self.employers.truncated(rounds), self.label)
