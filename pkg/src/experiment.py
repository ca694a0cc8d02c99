"""
Experiment runner: dataset sweeps over the three multi-match algorithms.

For every (dataset, seed) cell the runner generates a market, runs Normal,
LMF and Mixed MMDAA, measures displacement, withholdings and retention on
both sides, simulates the job-offer market from raw preferences and from
each algorithm's matches, and times each algorithm at a fixed round cap.
Each figure family is written as one CSV under the output directory.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import pandas as pd

from core import ExperimentError, Side, ValidationError
from datagen import MarketSpec, generate_market, proxy_spec
from formats import (
    METRIC_COLUMNS, VACANCY_COLUMNS, metric_records, read_json, vacancy_records, write_frame, write_json,
)
from lmf import LmfConfig, densify_market, lmf_mmdaa
from metrics import Consult, displacement, retention, withholdings
from mixed import mixed_from_market, mixed_from_runs, substitute_run
from mmdaa import MmdaaConfig, convergence_rounds, normal_mmdaa
from simulator import PlanMode, build_plans, simulate_market

logger = logging.getLogger(__name__)

ALGORITHMS = ('normal', 'lmf', 'mixed')
DEFAULT_SPECS = ('10x100', '50x100', '100x100', '110x100', '150x100')
LEADING = ('dataset', 'seed')
RUNTIME_COLUMNS = ('algorithm', 'rounds', 'seconds')
# markets with at least this many employers per candidate are expected to hire everyone
SPARSE_CANDIDATE_RATIO = 10


def parse_spec(text):
    """'NxM' label, 'proxy' for the 75x24 surplus-candidate market, or a MarketSpec field dict."""
    if isinstance(text, MarketSpec):
        return text
    if isinstance(text, dict):
        return MarketSpec(**{k: v for k, v in text.items() if k != 'label'})
    if str(text).strip().lower() == 'proxy':
        return proxy_spec()
    return MarketSpec.parse(text)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Attributes:
        specs: Markets to generate; each spec's own seed is replaced by `seeds`
        algorithms: Subset of normal, lmf, mixed
        metrics_cap: Rounds for displacement and withholdings; None means
            the Normal MMDAA convergence round of each market
        retention_cap: Rounds for the retention metric
        runtime_cap: Round cap for the timed runs
        simulation_rounds: Offer rounds in the market simulation
        lmf: LmfConfig for the densification
        apply_penalties: Add withholding penalties to displacement
        penalty_per_round: One penalty per withheld round (else per drought)
        out: Output directory
        seeds: Market seeds; every spec runs once per seed
        workers: Cells run concurrently when > 1
        timing: Record runtimes
    """
    specs: tuple = field(default_factory=lambda: tuple(MarketSpec.parse(s) for s in DEFAULT_SPECS))
    algorithms: tuple = ALGORITHMS
    metrics_cap: int = None
    retention_cap: int = 19
    runtime_cap: int = 10
    simulation_rounds: int = 3
    lmf: LmfConfig = field(default_factory=LmfConfig)
    apply_penalties: bool = True
    penalty_per_round: bool = True
    out: str = 'results'
    seeds: tuple = (0,)
    workers: int = 1
    timing: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'specs', tuple(parse_spec(s) for s in self.specs))
        object.__setattr__(self, 'algorithms', tuple(self.algorithms))
        object.__setattr__(self, 'seeds', tuple(int(s) for s in self.seeds))
        if not self.specs:
            raise ValidationError("Experiment needs at least one market spec")
        if not self.algorithms:
            raise ValidationError("Experiment needs at least one algorithm")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValidationError(f"Unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
        if not self.seeds:
            raise ValidationError("Experiment needs at least one seed")
        for name in ('retention_cap', 'runtime_cap', 'simulation_rounds', 'workers'):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.metrics_cap is not None and self.metrics_cap < 1:
            raise ValidationError(f"metrics_cap must be at least 1, got {self.metrics_cap}")

    @classmethod
    def from_json(cls, path):
        """Load a config file; keys mirror the field names, `lmf` is a nested object."""
        data = read_json(path)
        if not isinstance(data, dict):
            raise ValidationError(f"{path} must hold a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"{path}: unknown config keys {sorted(unknown)}")
        if 'lmf' in data:
            data['lmf'] = LmfConfig(**data['lmf'])
        return cls(**data)

    def with_overrides(self, **flags):
        """Return a copy with every non-None flag applied."""
        changes = {k: v for k, v in flags.items() if v is not None}
        return replace(self, **changes)

    def to_dict(self):
        data = asdict(self)
        data['specs'] = [spec.metadata() for spec in self.specs]
        data['lmf'] = {**asdict(self.lmf), 'reconcile': self.lmf.reconcile.value}
        return data


@dataclass
class CellResult:
    """Every record produced by one (dataset, seed) cell."""
    dataset: str
    seed: int
    rounds: int
    displacement: list = field(default_factory=list)
    withholdings: list = field(default_factory=list)
    retention: list = field(default_factory=list)
    vacancy: list = field(default_factory=list)
    runtime: list = field(default_factory=list)


@dataclass
class ExperimentResult:
    frames: dict
    paths: dict


@contextmanager
def _stage(label, seed, algorithm):
    try:
        yield
    except ExperimentError:
        raise
    except Exception as exc:
        raise ExperimentError(f"{label} seed {seed} {algorithm}: {exc}") from exc


class _Runs:
    """
    Normal and LMF runs made once and cut down on demand.

    With Mixed requested the LMF run goes until its dense tables are
    exhausted, and Mixed fills from all of it.
    """

    def __init__(self, cand, emp, rounds, dense, algorithms):
        cfg = MmdaaConfig(rounds)
        self.base = {}
        if {'normal', 'mixed'} & set(algorithms):
            self.base['normal'] = normal_mmdaa(cand, emp, cfg)
        if 'mixed' in algorithms:
            self.base['lmf'] = substitute_run(cand, emp, dense=dense)
        elif 'lmf' in algorithms:
            self.base['lmf'] = lmf_mmdaa(cand, emp, cfg, dense=dense)

    def at(self, algorithm, rounds):
        if algorithm == 'mixed':
            return mixed_from_runs(self.base['normal'].truncated(rounds), self.base['lmf'])
        return self.base[algorithm].truncated(rounds)


def _timed(cand, emp, algorithm, cap, lmf_cfg):
    cfg = MmdaaConfig(cap)
    start = time.perf_counter()
    if algorithm == 'normal':
        normal_mmdaa(cand, emp, cfg)
    elif algorithm == 'lmf':
        lmf_mmdaa(cand, emp, cfg, lmf_cfg)
    else:
        mixed_from_market(cand, emp, cfg, lmf_cfg)
    return time.perf_counter() - start


def run_cell(cfg, spec, seed):
    """Run every algorithm and metric for one market and seed."""
    spec = spec.with_seed(seed)
    label = spec.label
    with _stage(label, seed, 'datagen'):
        cand, emp = generate_market(spec)
        rounds = cfg.metrics_cap or convergence_rounds(cand, emp)
    logger.info(f"{label} seed {seed}: metrics over {rounds} rounds")
    cell = CellResult(label, seed, rounds)

    dense = None
    if {'lmf', 'mixed'} & set(cfg.algorithms):
        with _stage(label, seed, 'lmf'):
            dense = densify_market(cand, emp, cfg.lmf)
    stated = {Side.CANDIDATE: cand, Side.EMPLOYER: emp}
    dense_tables = {Side.CANDIDATE: dense.cand_prefs, Side.EMPLOYER: dense.emp_prefs} if dense else {}

    with _stage(label, seed, '+'.join(cfg.algorithms)):
        runs = _Runs(cand, emp, max(rounds, cfg.retention_cap), dense, cfg.algorithms)

    for algorithm in cfg.algorithms:
        with _stage(label, seed, algorithm):
            metric_run = runs.at(algorithm, rounds)
            retention_run = runs.at(algorithm, cfg.retention_cap)
            consult = Consult.DENSE if algorithm == 'lmf' else Consult.PROVENANCE

            for side in Side:
                matches = metric_run.side(side)
                series = displacement(
                    matches, stated[side], dense_tables.get(side), cfg.apply_penalties,
                    cfg.penalty_per_round, consult,
                )
                cell.displacement += metric_records(series, algorithm)
                cell.withholdings += metric_records(withholdings(matches), algorithm)
                cell.retention += metric_records(retention(retention_run.side(side), stated[side]), algorithm)

            plans = build_plans(PlanMode.FROM_MATCHES, metric_run.employers)
            report = simulate_market(plans, cand.agent_count, cfg.simulation_rounds)
            cell.vacancy += vacancy_records(report, PlanMode.FROM_MATCHES.value, algorithm)

            if cfg.timing:
                seconds = _timed(cand, emp, algorithm, cfg.runtime_cap, cfg.lmf)
                cell.runtime.append({'algorithm': algorithm, 'rounds': cfg.runtime_cap, 'seconds': seconds})

    with _stage(label, seed, PlanMode.REAL_WORLD.value):
        report = simulate_market(build_plans(PlanMode.REAL_WORLD, emp), cand.agent_count, cfg.simulation_rounds)
        cell.vacancy += vacancy_records(report, PlanMode.REAL_WORLD.value, 'none')
    return cell


def _frames(cells):
    def frame(attr, columns):
        rows = [{'dataset': cell.dataset, 'seed': cell.seed, **record} for cell in cells for record in getattr(cell, attr)]
        return pd.DataFrame(rows, columns=list(LEADING) + list(columns))

    return {
        'displacement': frame('displacement', METRIC_COLUMNS),
        'withholdings': frame('withholdings', METRIC_COLUMNS),
        'retention': frame('retention', METRIC_COLUMNS),
        'vacancy': frame('vacancy', VACANCY_COLUMNS),
        'runtime': frame('runtime', RUNTIME_COLUMNS),
    }


def _sides(dataset):
    spec = MarketSpec.parse(dataset)
    return spec.candidates, spec.employers


def _mean_over(frame, rounds):
    head = frame[frame['round'] <= rounds]
    head = head.assign(average=pd.to_numeric(head['average']))
    return head.groupby(['dataset', 'seed', 'algorithm', 'side'])['average'].mean()


def check_trends(frames, rounds=10, retention_bound=0.30):
    """
    Evaluate the qualitative claims the sweep is expected to show.

    Each row names one check for one (dataset, seed) and whether it holds.
    Apart from the candidate vacancy floor, none of these are guaranteed
    on every random market.

    Args:
        frames: Dict of result DataFrames as built by run_experiment
        rounds: Rounds the displacement and retention means cover
        retention_bound: Upper bound on mean LMF retention

    Returns:
        DataFrame with columns dataset, seed, check, side, holds, value, reference
    """
    rows = []

    def add(dataset, seed, check, side, holds, value, reference):
        rows.append({
            'dataset': dataset, 'seed': seed, 'check': check, 'side': side,
            'holds': bool(holds), 'value': value, 'reference': reference,
        })

    disp = _mean_over(frames['displacement'], rounds)
    for (dataset, seed, algorithm, side), value in disp.items():
        if algorithm != 'mixed':
            continue
        for other in ('normal', 'lmf'):
            key = (dataset, seed, other, side)
            if key in disp.index:
                add(dataset, seed, f"mixed_displacement_le_{other}", side, value <= disp[key], value, disp[key])

    held = frames['withholdings']
    held = held[held['round'] <= rounds].groupby(['dataset', 'seed', 'algorithm', 'side'])['total'].sum()
    for (dataset, seed, algorithm, side), value in held.items():
        if algorithm != 'mixed':
            continue
        key = (dataset, seed, 'normal', side)
        if key in held.index:
            add(dataset, seed, 'mixed_withholdings_le_normal', side, value <= held[key], value, held[key])
        n, m = _sides(dataset)
        if n == m:
            add(dataset, seed, 'mixed_withholdings_zero', side, value == 0, value, 0)

    ret = _mean_over(frames['retention'], rounds)
    for (dataset, seed, algorithm, side), value in ret.items():
        if algorithm == 'lmf':
            add(dataset, seed, 'lmf_retention_bounded', side, value <= retention_bound, value, retention_bound)

    vac = frames['vacancy']
    real = vac[vac['mode'] == PlanMode.REAL_WORLD.value].set_index(['dataset', 'seed', 'round'])
    for _, row in vac[vac['mode'] == PlanMode.FROM_MATCHES.value].iterrows():
        key = (row['dataset'], row['seed'], row['round'])
        if key not in real.index:
            continue
        for side, column in (('E', 'employer_vacancy'), ('C', 'candidate_vacancy')):
            baseline = real.loc[key, column]
            add(row['dataset'], row['seed'], f"real_world_vacancy_ge_{row['algorithm']}_round{row['round']}",
                side, baseline >= row[column], row[column], baseline)

    last = vac[vac['round'] == vac.groupby(['dataset', 'seed', 'mode', 'algorithm'])['round'].transform('max')]
    for _, row in last.iterrows():
        n, m = _sides(row['dataset'])
        value = row['candidate_vacancy']
        source = row['algorithm'] if row['mode'] == PlanMode.FROM_MATCHES.value else row['mode']
        if n > m:
            # at most m hires
            floor = (n - m) / n
            add(row['dataset'], row['seed'], f"candidate_vacancy_floor_{source}", 'C',
                value >= floor - 1e-12, value, floor)
        elif n * SPARSE_CANDIDATE_RATIO <= m:
            add(row['dataset'], row['seed'], f"candidate_vacancy_zero_{source}", 'C', value == 0, value, 0)

    runtime = frames.get('runtime')
    if runtime is not None and not runtime.empty:
        times = runtime.set_index(['dataset', 'seed', 'algorithm'])['seconds']
        for dataset, seed in runtime[['dataset', 'seed']].drop_duplicates().itertuples(index=False):
            if (dataset, seed, 'normal') in times.index and (dataset, seed, 'lmf') in times.index:
                normal, lmf = times[(dataset, seed, 'normal')], times[(dataset, seed, 'lmf')]
                add(dataset, seed, 'normal_faster_than_lmf', '', normal <= lmf, normal, lmf)

    return pd.DataFrame(rows, columns=['dataset', 'seed', 'check', 'side', 'holds', 'value', 'reference'])


def run_experiment(cfg):
    """
    Run every (dataset, seed) cell and write one CSV per result family.

    Returns:
        ExperimentResult with the DataFrames and the paths written
    """
    cells_to_run = [(spec, seed) for spec in cfg.specs for seed in cfg.seeds]
    logger.info(f"Running {len(cells_to_run)} cells with {cfg.workers} worker(s): {', '.join(cfg.algorithms)}")

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            cells = list(pool.map(lambda job: run_cell(cfg, *job), cells_to_run))
    else:
        cells = [run_cell(cfg, spec, seed) for spec, seed in cells_to_run]

    frames = _frames(cells)
    frames['trends'] = check_trends(frames)
    failing = frames['trends'][~frames['trends']['holds']] if not frames['trends'].empty else frames['trends']
    if len(failing):
        logger.warning(f"{len(failing)} of {len(frames['trends'])} trend checks do not hold; see trends.csv")

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: write_frame(frame, out / f"{name}.csv") for name, frame in frames.items()}
    paths['config'] = write_json(cfg.to_dict(), out / 'config.json')
    logger.info(f"Wrote {len(paths)} files to {out}")
    return ExperimentResult(frames, paths)
