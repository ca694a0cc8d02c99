"""
CSV and JSON readers/writers for preference tables, multi-round matchings,
metric series, vacancy reports and factor dumps.

Agent and counterpart IDs are 1-based on disk and 0-based in memory.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from core import (
    DEPARTED, NONE, FormatError, MultiMatching, PreferenceTable, Provenance,
    Side, SideMatches, ValidationError, validate_preference_table,
)

logger = logging.getLogger(__name__)

PREFERENCE_COLUMNS = ['side', 'agent', 'rank', 'counterpart']
MATCH_COLUMNS = ['side', 'agent', 'round', 'counterpart', 'provenance']
METRIC_COLUMNS = ['metric', 'algorithm', 'side', 'round', 'total', 'participants', 'average']
VACANCY_COLUMNS = ['mode', 'algorithm', 'round', 'employer_vacancy', 'candidate_vacancy']
ACCEPTANCE_COLUMNS = ['round', 'employer', 'candidate', 'accepted']
FACTOR_COLUMNS = ['side', 'row', 'factor_index', 'value']


def _read_csv(path, columns):
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise FormatError(f"Cannot read {path}: {exc}") from exc
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise FormatError(f"{path} is missing columns {missing}")
    return frame


def write_frame(frame, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


# ---- preferences ----

def preference_records(table):
    records = []
    for agent, row in enumerate(table.rows):
        if not row:
            records.append((table.side.value, agent + 1, 0, NONE))
        records.extend((table.side.value, agent + 1, pos + 1, cp + 1) for pos, cp in enumerate(row))
    return records


def write_preferences(cand_prefs, emp_prefs, path):
    """Write both sides of a market to one long-form preference CSV."""
    records = preference_records(cand_prefs) + preference_records(emp_prefs)
    return write_frame(pd.DataFrame(records, columns=PREFERENCE_COLUMNS), path)


def _side_rows(frame, side, path):
    part = frame[frame['side'] == side.value]
    if part.empty:
        return []

    agents = part['agent'].tolist()
    # each agent's lines must form one contiguous block
    blocks = [a for i, a in enumerate(agents) if i == 0 or a != agents[i - 1]]
    if len(blocks) != len(set(blocks)):
        raise FormatError(f"{path}: {side.name} rows for one agent are not contiguous")
    if sorted(blocks) != list(range(1, len(blocks) + 1)):
        raise FormatError(f"{path}: {side.name} agents must be numbered 1..{len(blocks)} without gaps")

    rows = [()] * len(blocks)
    for agent, group in part.groupby('agent', sort=False):
        ranks = group['rank'].tolist()
        counterparts = group['counterpart'].tolist()
        if ranks == [0] and counterparts == [NONE]:
            rows[agent - 1] = ()
            continue
        if ranks != list(range(1, len(ranks) + 1)):
            raise FormatError(f"{path}: {side.value}{agent} ranks are not 1..{len(ranks)} ascending")
        rows[agent - 1] = tuple(int(cp) - 1 for cp in counterparts)
    return rows


def read_preferences(path):
    """
    Read a preference CSV written by write_preferences.

    Returns:
        Tuple (cand_prefs, emp_prefs)
    """
    frame = _read_csv(path, PREFERENCE_COLUMNS)
    bad_sides = set(frame['side']) - {Side.CANDIDATE.value, Side.EMPLOYER.value}
    if bad_sides:
        raise FormatError(f"{path}: unknown side labels {sorted(bad_sides)}")
    try:
        frame = frame.astype({'agent': int, 'rank': int, 'counterpart': int})
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: non-integer ID or rank ({exc})") from exc

    cand_rows = _side_rows(frame, Side.CANDIDATE, path)
    emp_rows = _side_rows(frame, Side.EMPLOYER, path)
    cand = PreferenceTable(Side.CANDIDATE, tuple(cand_rows), len(emp_rows))
    emp = PreferenceTable(Side.EMPLOYER, tuple(emp_rows), len(cand_rows))
    for table in (cand, emp):
        report = validate_preference_table(table)
        if not report.ok:
            try:
                report.raise_if_failed(f"{table.side.name.lower()} preferences in {path}")
            except ValidationError as exc:
                raise FormatError(str(exc)) from exc
    logger.info(f"Read {cand.agent_count}x{emp.agent_count} market from {path}")
    return cand, emp


# ---- multi-round matchings ----

def match_records(side_matches):
    records = []
    for agent, (row, prov) in enumerate(zip(side_matches.rows, side_matches.provenance)):
        for r, (cp, tag) in enumerate(zip(row, prov)):
            if cp == DEPARTED:
                continue
            records.append((side_matches.side.value, agent + 1, r + 1, cp + 1 if cp >= 0 else NONE, tag.value))
    return records


def write_matches(multi, path):
    """Write a MultiMatching; departed cells get no line."""
    records = match_records(multi.candidates) + match_records(multi.employers)
    return write_frame(pd.DataFrame(records, columns=MATCH_COLUMNS), path)


def _side_matches(frame, side, agent_count, counterpart_count, round_count):
    rows = [[DEPARTED] * round_count for _ in range(agent_count)]
    prov = [[Provenance.STATED] * round_count for _ in range(agent_count)]
    part = frame[frame['side'] == side.value]
    for agent, r, cp, tag in zip(part['agent'], part['round'], part['counterpart'], part['provenance']):
        rows[agent - 1][r - 1] = cp - 1 if cp > 0 else NONE
        prov[agent - 1][r - 1] = Provenance(tag)
    return SideMatches(side, tuple(map(tuple, rows)), tuple(map(tuple, prov)), counterpart_count)


def read_matches(path, label=''):
    """
    Read a MultiMatching CSV. Cells without a line are departed.

    Population counts come from the highest agent ID seen on each side.
    """
    frame = _read_csv(path, MATCH_COLUMNS)
    try:
        frame = frame.astype({'agent': int, 'round': int, 'counterpart': int})
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: non-integer field ({exc})") from exc
    bad = set(frame['provenance']) - {p.value for p in Provenance}
    if bad:
        raise FormatError(f"{path}: unknown provenance {sorted(bad)}")
    bad_ids = (frame['agent'] < 1) | (frame['round'] < 1) | (frame['counterpart'] < NONE) | (frame['counterpart'] == 0)
    if bad_ids.any():
        raise FormatError(f"{path}: IDs and rounds are 1-based, counterpart -1 marks a withheld round")
    if frame.duplicated(['side', 'agent', 'round']).any():
        raise FormatError(f"{path}: an agent has two lines for the same round")

    counts = frame.groupby('side')['agent'].max().to_dict()
    n, m = int(counts.get(Side.CANDIDATE.value, 0)), int(counts.get(Side.EMPLOYER.value, 0))
    rounds = int(frame['round'].max()) if len(frame) else 0
    multi = MultiMatching(
        _side_matches(frame, Side.CANDIDATE, n, m, rounds),
        _side_matches(frame, Side.EMPLOYER, m, n, rounds),
        label=label,
    )
    for side in (multi.candidates, multi.employers):
        if any(cp >= side.counterpart_count for row in side.rows for cp in row):
            raise FormatError(f"{path}: {side.side.name} matched to a counterpart outside the market")
        try:
            side.check_one_to_one()
        except ValidationError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    return multi


# ---- metrics, vacancy, factors ----

def metric_records(series, algorithm):
    return [
        {
            'metric': series.metric,
            'algorithm': algorithm,
            'side': series.side.value,
            'round': r + 1,
            'total': int(value.total) if value.total.denominator == 1 else float(value.total),
            'participants': value.participants,
            'average': float(value.average) if value.average is not None else None,
        }
        for r, value in enumerate(series.rounds)
    ]


def write_metrics(records, path, leading=()):
    """Write metric records; `leading` names extra key columns placed first."""
    return write_frame(pd.DataFrame(records, columns=list(leading) + METRIC_COLUMNS), path)


def vacancy_records(report, mode, algorithm):
    return [
        {
            'mode': mode,
            'algorithm': algorithm,
            'round': r + 1,
            'employer_vacancy': float(ev),
            'candidate_vacancy': float(cv),
        }
        for r, (ev, cv) in enumerate(zip(report.employer_vacancy, report.candidate_vacancy))
    ]


def write_vacancy(records, path, leading=()):
    return write_frame(pd.DataFrame(records, columns=list(leading) + VACANCY_COLUMNS), path)


def write_acceptance_log(report, path):
    records = [(e.round + 1, e.employer + 1, e.candidate + 1, e.accepted) for e in report.offers]
    return write_frame(pd.DataFrame(records, columns=ACCEPTANCE_COLUMNS), path)


def factor_records(factors, side):
    """
    Long-form rows for one side's factorization.

    Left factor rows belong to the factorized side's agents and right factor
    columns to its counterparts, so each is tagged with the side it indexes.
    """
    side = Side(side)
    records = []
    for tag, matrix in ((side, factors.left), (side.opposite, factors.right.T)):
        rows, ks = np.indices(matrix.shape)
        records.extend(zip(
            [tag.value] * matrix.size, (rows.ravel() + 1).tolist(), (ks.ravel() + 1).tolist(),
            matrix.ravel().tolist(),
        ))
    return records


def write_factors(factors, directory, side):
    """Dump one side's factors as `<side>.csv` in the `side,row,factor_index,value` layout."""
    path = Path(directory) / f"{Side(side).name.lower()}.csv"
    return write_frame(pd.DataFrame(factor_records(factors, side), columns=FACTOR_COLUMNS), path)


# ---- JSON ----

def write_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + '\n')
    return path


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise FormatError(f"Cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc
