"""
Command-line entry point.

    python src/main.py gen --spec 100x100 --seed 3 --out data/
    python src/main.py match --prefs data/market.csv --algo mixed --rounds 10 --out runs/
    python src/main.py metrics --prefs data/market.csv --matches runs/matches_mixed.csv --dense runs/dense.csv
    python src/main.py simulate --prefs data/market.csv --matches runs/matches_normal.csv
    python src/main.py experiment --config sweep.json --workers 4
    python src/main.py fixtures
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from core import MatchingError, Side
from datagen import generate_market
from experiment import ALGORITHMS, ExperimentConfig, parse_spec, run_experiment
from fixture_suite import run_fixture_suite
from formats import (
    metric_records, read_matches, read_preferences, vacancy_records, write_acceptance_log,
    write_factors, write_json, write_matches, write_metrics, write_preferences, write_vacancy,
)
from lmf import LmfConfig, densify_market, lmf_mmdaa
from metrics import Consult, displacement, retention, withholdings
from mixed import mixed_from_market
from mmdaa import MmdaaConfig, normal_mmdaa
from simulator import PlanMode, build_plans, simulate_market

logger = logging.getLogger(__name__)


def str2bool(text):
    value = str(text).strip().lower()
    if value in ('true', '1', 'yes', 'on'):
        return True
    if value in ('false', '0', 'no', 'off'):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def configure_logging(verbose=False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - [MMDAA] - %(message)s',
        datefmt='%H:%M:%S'
    )


def cmd_gen(args):
    """Generate a synthetic market and write market.csv plus metadata.json."""
    spec = parse_spec(args.spec)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    if args.prefs_per_candidate is not None:
        spec = replace(spec, prefs_per_candidate=args.prefs_per_candidate)
    cand, emp = generate_market(spec)
    out = Path(args.out)
    write_preferences(cand, emp, out / 'market.csv')
    write_json(spec.metadata(), out / 'metadata.json')
    logger.info(f"Market {spec.label} written to {out}")
    return 0


def _lmf_config(args):
    lcfg = LmfConfig()
    if args.lmf_rank is not None:
        lcfg = replace(lcfg, rank=args.lmf_rank)
    if args.seed is not None:
        lcfg = replace(lcfg, seed=args.seed)
    return lcfg


def cmd_match(args):
    """
    Run one algorithm on a preference file.

    Writes matches_<algo>.csv; LMF and Mixed also write the densified
    preferences (dense.csv) and both sides' factors. Mixed keeps the Normal
    horizon of --rounds but fills from a full LMF run.
    """
    cand, emp = read_preferences(args.prefs)
    mcfg = MmdaaConfig(args.rounds)
    out = Path(args.out)

    if args.algo == 'normal':
        result = normal_mmdaa(cand, emp, mcfg)
    else:
        dense = densify_market(cand, emp, _lmf_config(args))
        write_preferences(dense.cand_prefs, dense.emp_prefs, out / 'dense.csv')
        write_factors(dense.cand_factors, out / 'factors', Side.CANDIDATE)
        write_factors(dense.emp_factors, out / 'factors', Side.EMPLOYER)
        if args.algo == 'mixed':
            result = mixed_from_market(cand, emp, mcfg, dense=dense)
        else:
            result = lmf_mmdaa(cand, emp, mcfg, dense=dense)

    path = write_matches(result, out / f"matches_{args.algo}.csv")
    logger.info(f"{args.algo} produced {result.round_count} rounds; written to {path}")
    return 0


def cmd_metrics(args):
    """Compute displacement, withholdings and retention for both sides of a match file."""
    cand, emp = read_preferences(args.prefs)
    multi = read_matches(args.matches, label=args.algo)
    dense = dict(zip(Side, read_preferences(args.dense))) if args.dense else {}
    stated = {Side.CANDIDATE: cand, Side.EMPLOYER: emp}
    consult = Consult.DENSE if args.algo == 'lmf' and dense else Consult.PROVENANCE
    if args.rounds is not None:
        multi = multi.truncated(args.rounds)

    records = []
    for side in Side:
        matches = multi.side(side)
        records += metric_records(
            displacement(matches, stated[side], dense.get(side), args.penalties, args.penalty_per_round, consult),
            args.algo,
        )
        records += metric_records(withholdings(matches), args.algo)
        records += metric_records(retention(matches, stated[side]), args.algo)
    path = write_metrics(records, Path(args.out) / f"metrics_{args.algo}.csv")
    logger.info(f"Metrics over {multi.round_count} rounds written to {path}")
    return 0


def cmd_simulate(args):
    """Run the job-offer simulation from raw preferences, or from a match file when one is given."""
    cand, emp = read_preferences(args.prefs)
    if args.matches:
        mode, plans = PlanMode.FROM_MATCHES, build_plans(PlanMode.FROM_MATCHES, read_matches(args.matches).employers)
    else:
        mode, plans = PlanMode.REAL_WORLD, build_plans(PlanMode.REAL_WORLD, emp)
    report = simulate_market(plans, cand.agent_count, args.rounds)

    out = Path(args.out)
    write_vacancy(vacancy_records(report, mode.value, args.algo), out / f"vacancy_{mode.value}.csv")
    write_acceptance_log(report, out / f"offers_{mode.value}.csv")
    for r, (ev, cv) in enumerate(zip(report.employer_vacancy, report.candidate_vacancy)):
        logger.info(f"Round {r + 1}: employer vacancy {float(ev):.1%}, candidate vacancy {float(cv):.1%}")
    return 0


def cmd_experiment(args):
    """Run the dataset sweep; flags override values from --config."""
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    lmf = replace(cfg.lmf, rank=args.lmf_rank) if args.lmf_rank is not None else None
    cfg = cfg.with_overrides(
        specs=args.spec,
        algorithms=args.algo,
        metrics_cap=args.rounds,
        seeds=args.seed,
        lmf=lmf,
        penalty_per_round=args.penalty_per_round,
        out=args.out,
        workers=args.workers,
    )
    result = run_experiment(cfg)
    trends = result.frames['trends']
    logger.info(f"{int(trends['holds'].sum()) if len(trends) else 0} of {len(trends)} trend checks hold")
    return 0


def cmd_fixtures(args):
    """Run the worked-example fixtures; exit status 1 if any fail."""
    results = run_fixture_suite(names=args.name or None)
    failed = [r.name for r in results if not r.passed]
    logger.info(f"{len(results) - len(failed)} of {len(results)} fixtures passed")
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(description="Multi-round stable matching engine and experiment harness.")
    parser.add_argument('--verbose', action='store_true', help="Log at DEBUG level")
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen', help="Generate a synthetic market")
    gen.add_argument('--spec', default='100x100', help="Market size NxM, or 'proxy'")
    gen.add_argument('--seed', type=int, default=None)
    gen.add_argument('--prefs-per-candidate', type=int, default=None)
    gen.add_argument('--out', default='data')
    gen.set_defaults(func=cmd_gen)

    match = sub.add_parser('match', help="Run a matching algorithm on a preference file")
    match.add_argument('--prefs', required=True)
    match.add_argument('--algo', choices=ALGORITHMS, default='normal')
    match.add_argument('--rounds', type=int, default=5)
    match.add_argument('--lmf-rank', type=int, default=None)
    match.add_argument('--seed', type=int, default=None, help="Factor initialization seed")
    match.add_argument('--out', default='runs')
    match.set_defaults(func=cmd_match)

    metrics = sub.add_parser('metrics', help="Score a match file")
    metrics.add_argument('--prefs', required=True)
    metrics.add_argument('--matches', required=True)
    metrics.add_argument('--dense', default=None, help="Densified preferences, needed for inferred matches")
    metrics.add_argument('--algo', choices=ALGORITHMS, default='normal')
    metrics.add_argument('--rounds', type=int, default=None)
    metrics.add_argument('--penalties', type=str2bool, default=True)
    metrics.add_argument('--penalty-per-round', type=str2bool, default=True)
    metrics.add_argument('--out', default='runs')
    metrics.set_defaults(func=cmd_metrics)

    simulate = sub.add_parser('simulate', help="Run the job-offer simulation")
    simulate.add_argument('--prefs', required=True)
    simulate.add_argument('--matches', default=None, help="Offer from these matches instead of raw preferences")
    simulate.add_argument('--algo', default='none', help="Label written to the vacancy file")
    simulate.add_argument('--rounds', type=int, default=3)
    simulate.add_argument('--out', default='runs')
    simulate.set_defaults(func=cmd_simulate)

    experiment = sub.add_parser('experiment', help="Run the dataset sweep")
    experiment.add_argument('--config', default=None, help="JSON config; flags override it")
    experiment.add_argument('--spec', action='append', default=None, help="NxM or 'proxy'; repeatable")
    experiment.add_argument('--algo', action='append', choices=ALGORITHMS, default=None)
    experiment.add_argument('--rounds', type=int, default=None, help="Metrics round cap")
    experiment.add_argument('--seed', type=int, action='append', default=None)
    experiment.add_argument('--lmf-rank', type=int, default=None)
    experiment.add_argument('--penalty-per-round', type=str2bool, default=None)
    experiment.add_argument('--out', default=None)
    experiment.add_argument('--workers', type=int, default=None)
    experiment.set_defaults(func=cmd_experiment)

    fixtures = sub.add_parser('fixtures', help="Run the worked-example regression fixtures")
    fixtures.add_argument('--name', action='append', default=None)
    fixtures.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.func(args)
    except MatchingError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
