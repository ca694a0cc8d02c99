"""
Regression suite over the worked examples shipped in fixtures/.

Each fixture directory holds input CSVs and an expected.json. Rational
values are stored as strings ("2/3") and compared exactly.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from core import NONE, MatchingError, Side, ValidationError
from formats import read_json, read_matches, read_preferences
from metrics import Consult, displacement
from mixed import mixed_from_runs
from mmdaa import normal_mmdaa
from simulator import PlanMode, assign_classes, build_plans, simulate_market

logger = logging.getLogger(__name__)

FIXTURE_ROOT = Path(__file__).resolve().parent.parent / 'fixtures'


@dataclass
class FixtureResult:
    name: str
    passed: bool = True
    diff: list = field(default_factory=list)

    def expect(self, what, expected, actual):
        if expected != actual:
            self.passed = False
            self.diff.append(f"{what}: expected {expected}, got {actual}")


def _fractions(values):
    return [Fraction(v) if v is not None else None for v in values]


def _check_displacement(result, spec, multi, stated, dense):
    side = Side(spec['side'])
    series = displacement(
        multi.side(side),
        stated[side],
        dense[side] if dense else None,
        apply_penalties=spec.get('apply_penalties', False),
        consult=Consult(spec.get('consult', Consult.PROVENANCE.value)),
    )
    result.expect(f"{side.name} displacement averages", _fractions(spec['averages']), list(series.averages))
    if 'participants' in spec:
        result.expect(f"{side.name} participants", spec['participants'], list(series.participants))


def _one_based(row):
    return [cp + 1 if cp >= 0 else NONE for cp in row]


def check_lmf_displacement(directory):
    result = FixtureResult(directory.name)
    expected = read_json(directory / 'expected.json')
    cand, emp = read_preferences(directory / 'original.csv')
    dense_cand, dense_emp = read_preferences(directory / 'dense.csv')
    multi = read_matches(directory / 'matches.csv', label='lmf')
    _check_displacement(
        result, expected['displacement'], multi,
        {Side.CANDIDATE: cand, Side.EMPLOYER: emp},
        {Side.CANDIDATE: dense_cand, Side.EMPLOYER: dense_emp},
    )
    return result


def check_mixed_fill(directory):
    result = FixtureResult(directory.name)
    expected = read_json(directory / 'expected.json')
    cand, emp = read_preferences(directory / 'original.csv')
    dense_cand, dense_emp = read_preferences(directory / 'dense.csv')
    normal = read_matches(directory / 'normal.csv', label='normal')
    lmf = read_matches(directory / 'lmf.csv', label='lmf')

    rerun = normal_mmdaa(cand, emp)
    result.expect("Normal MMDAA candidate rows", normal.candidates.rows, rerun.candidates.rows)
    result.expect("Normal MMDAA employer rows", normal.employers.rows, rerun.employers.rows)

    mixed = mixed_from_runs(normal, lmf)
    for key, side in (('candidates', Side.CANDIDATE), ('employers', Side.EMPLOYER)):
        for agent, row in expected.get(key, {}).items():
            actual = _one_based(mixed.side(side).rows[int(agent) - 1])
            result.expect(f"Mixed {side.value}{agent}", row, actual)

    _check_displacement(
        result, expected['displacement'], mixed,
        {Side.CANDIDATE: cand, Side.EMPLOYER: emp},
        {Side.CANDIDATE: dense_cand, Side.EMPLOYER: dense_emp},
    )
    return result


def check_offer_market(directory):
    result = FixtureResult(directory.name)
    expected = read_json(directory / 'expected.json')
    cand, emp = read_preferences(directory / 'market.csv')
    plans = build_plans(PlanMode.REAL_WORLD, emp, assign_classes(emp.agent_count))
    report = simulate_market(plans, cand.agent_count, expected['rounds'])

    result.expect("employer vacancy", _fractions(expected['employer_vacancy']), report.employer_vacancy)
    result.expect("candidate vacancy", _fractions(expected['candidate_vacancy']), report.candidate_vacancy)
    events = {(e.round + 1, e.employer + 1, e.candidate + 1): e.accepted for e in report.offers}
    for key in map(tuple, expected.get('acceptances', [])):
        result.expect(f"offer round {key[0]} E{key[1]} -> C{key[2]}", True, events.get(key))
    for key in map(tuple, expected.get('declines', [])):
        result.expect(f"offer round {key[0]} E{key[1]} -> C{key[2]}", False, events.get(key))
    return result


FIXTURES = {
    'lmf_displacement': check_lmf_displacement,
    'mixed_fill': check_mixed_fill,
    'offer_market': check_offer_market,
}


def run_fixture_suite(root=FIXTURE_ROOT, names=None):
    """
    Run the named fixtures (all by default).

    Returns:
        List of FixtureResult; a fixture whose inputs fail to load is
        reported as failed with the error in its diff
    """
    root = Path(root)
    results = []
    for name in names or FIXTURES:
        if name not in FIXTURES:
            raise ValidationError(f"Unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
        try:
            result = FIXTURES[name](root / name)
        except MatchingError as exc:
            result = FixtureResult(name, False, [f"{type(exc).__name__}: {exc}"])
        if result.passed:
            logger.info(f"Fixture {name}: ok")
        else:
            logger.warning(f"Fixture {name} FAILED:\n  " + '\n  '.join(result.diff))
        results.append(result)
    return results
