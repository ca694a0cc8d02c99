"""
Low-rank densification of sparse preference tables.

Stated ranks become non-negative scores, a masked non-negative matrix
factorization fills in every unobserved cell, and the reconstructed
scores are turned back into a total order per agent. The default
reconciliation keeps the stated items in their stated relative order and
lets inferred items interleave by learned score.

The factorization alternates projected-gradient steps on the two factors.
Each step backtracks until the masked, L2-regularized loss shows
sufficient decrease, so the loss never goes up between iterations.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from core import (
    FactorizationError, MultiMatching, PreferenceTable, Provenance, SideMatches,
    ValidationError, require_market,
)
from mmdaa import MmdaaConfig, normal_mmdaa

logger = logging.getLogger(__name__)

SUFFICIENT_DECREASE = 0.01
STEP_SHRINK = 0.5
MAX_BACKTRACKS = 40


class Reconcile(str, Enum):
    RELATIVE_ORDER = 'relative_order'
    AS_IS = 'as_is'
    KEEP_STATED = 'keep_stated'


@dataclass(frozen=True)
class LmfConfig:
    """
    Attributes:
        rank: Latent rank f; None means min(10, n, m) for each matrix
        max_iterations: Iteration cap for the alternating updates
        tolerance: Stop once the relative loss decrease drops below this
        seed: Seed for the uniform (0, 1) factor initialization
        regularization: L2 weight on both factors
        reconcile: How stated ranks constrain the densified rows
    """
    rank: int = None
    max_iterations: int = 500
    tolerance: float = 1e-4
    seed: int = 0
    regularization: float = 0.01
    reconcile: Reconcile = Reconcile.RELATIVE_ORDER

    def __post_init__(self):
        if self.rank is not None and self.rank < 1:
            raise ValidationError(f"LMF rank must be at least 1, got {self.rank}")
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be positive, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise ValidationError(f"tolerance must be positive, got {self.tolerance}")
        if self.regularization < 0:
            raise ValidationError(f"regularization must be non-negative, got {self.regularization}")
        object.__setattr__(self, 'reconcile', Reconcile(self.reconcile))

    def rank_for(self, rows, cols):
        rank = self.rank if self.rank is not None else min(10, rows, cols)
        if rank > min(rows, cols):
            raise ValidationError(f"LMF rank {rank} exceeds min({rows}, {cols})")
        return rank


@dataclass(frozen=True)
class ScoreMatrix:
    values: np.ndarray
    mask: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    @property
    def observed(self):
        return int(self.mask.sum())


@dataclass(frozen=True)
class FactorPair:
    left: np.ndarray
    right: np.ndarray
    loss_history: tuple = field(default=(), compare=False)

    @property
    def rank(self):
        return self.left.shape[1]

    @property
    def iterations(self):
        return max(0, len(self.loss_history) - 1)

    def reconstruct(self):
        return self.left @ self.right


@dataclass(frozen=True)
class DenseMarket:
    cand_prefs: PreferenceTable
    emp_prefs: PreferenceTable
    cand_factors: FactorPair = field(compare=False)
    emp_factors: FactorPair = field(compare=False)


def ranks_to_scores(table, counterpart_count=None):
    """
    Turn positional ranks into scores Rmax - position.

    Rmax is the longest row in the whole table, so every stated score is at
    least 1 and unobserved cells stay at 0 under a False mask.
    """
    if counterpart_count is None:
        counterpart_count = table.counterpart_count
    if table.is_empty():
        raise FactorizationError(f"{table.side.name} preferences hold nothing to factorize")

    r_max = table.max_row_length
    values = np.zeros((table.agent_count, counterpart_count))
    mask = np.zeros((table.agent_count, counterpart_count), dtype=bool)
    for agent, row in enumerate(table.rows):
        for pos, cp in enumerate(row):
            values[agent, cp] = r_max - pos
            mask[agent, cp] = True
    return ScoreMatrix(values, mask)


def _loss(values, mask, left, right, reg):
    residual = mask * (values - left @ right)
    return float(np.sum(residual ** 2) + reg * (np.sum(left ** 2) + np.sum(right ** 2)))


def _projected_step(factor, grad, loss_at, current_loss, step):
    """
    Backtracking projected-gradient step on one factor.

    Returns the accepted factor, its loss and the step size to start from
    next time. If no trial passes the sufficient-decrease test the factor is
    returned unchanged.
    """
    trial_step = step * 2.0
    for _ in range(MAX_BACKTRACKS):
        candidate = np.maximum(factor - trial_step * grad, 0.0)
        candidate_loss = loss_at(candidate)
        if candidate_loss - current_loss <= SUFFICIENT_DECREASE * float(np.sum(grad * (candidate - factor))):
            return candidate, candidate_loss, trial_step
        trial_step *= STEP_SHRINK
    return factor, current_loss, trial_step


def nnmf(scores, cfg=None):
    """
    Factorize a masked score matrix into non-negative left and right factors.

    Minimizes sum over observed cells of (values - left @ right)^2 plus
    regularization * (|left|^2 + |right|^2).

    Args:
        scores: ScoreMatrix with at least one observed cell
        cfg: LmfConfig

    Returns:
        FactorPair whose loss_history holds the initial loss and the loss
        after every completed iteration
    """
    cfg = cfg or LmfConfig()
    if scores.observed == 0:
        raise FactorizationError("Score matrix holds nothing to factorize")

    n, m = scores.shape
    rank = cfg.rank_for(n, m)
    rng = np.random.default_rng(cfg.seed)
    left = rng.uniform(0.0, 1.0, size=(n, rank))
    right = rng.uniform(0.0, 1.0, size=(rank, m))
    values, mask, reg = scores.values, scores.mask.astype(float), cfg.regularization

    loss = _loss(values, mask, left, right, reg)
    history = [loss]
    step_left = step_right = 1.0

    for iteration in range(cfg.max_iterations):
        grad_left = -2.0 * (mask * (values - left @ right)) @ right.T + 2.0 * reg * left
        left, loss, step_left = _projected_step(
            left, grad_left, lambda w: _loss(values, mask, w, right, reg), loss, step_left
        )
        grad_right = -2.0 * left.T @ (mask * (values - left @ right)) + 2.0 * reg * right
        right, loss, step_right = _projected_step(
            right, grad_right, lambda h: _loss(values, mask, left, h, reg), loss, step_right
        )

        if not np.isfinite(loss):
            raise FactorizationError(
                f"Non-finite loss at iteration {iteration + 1} (steps {step_left:.3g}/{step_right:.3g})"
            )
        previous = history[-1]
        if loss > previous * (1 + 1e-12) + 1e-12:
            raise FactorizationError(f"Loss rose from {previous:.6g} to {loss:.6g} at iteration {iteration + 1}")
        history.append(loss)
        if previous <= 0 or (previous - loss) / previous < cfg.tolerance:
            break
    else:
        logger.warning(f"NNMF stopped on the iteration cap ({cfg.max_iterations}) at loss {loss:.6g}")

    logger.info(f"NNMF {n}x{m} rank {rank}: loss {history[0]:.4g} -> {loss:.4g} in {len(history) - 1} iterations")
    return FactorPair(left, right, tuple(history))


def _score_order(scores):
    # descending score, ties by ascending counterpart index
    return [int(j) for j in np.lexsort((np.arange(len(scores)), -scores))]


def densify_row(stated, scores, reconcile=Reconcile.RELATIVE_ORDER):
    """
    Build a total order over all counterparts for one agent.

    Args:
        stated: The agent's stated row
        scores: Reconstructed score per counterpart
        reconcile: Reconcile mode
    """
    order = _score_order(scores)
    if reconcile is Reconcile.AS_IS or not stated:
        return tuple(order)
    stated_set = set(stated)
    if reconcile is Reconcile.KEEP_STATED:
        return tuple(stated) + tuple(j for j in order if j not in stated_set)
    slots = [pos for pos, j in enumerate(order) if j in stated_set]
    for pos, j in zip(slots, stated):
        order[pos] = j
    return tuple(order)


def densify(original, factors, reconcile=Reconcile.RELATIVE_ORDER):
    """
    Complete every row of a preference table from reconstructed scores.

    Args:
        original: Stated PreferenceTable
        factors: FactorPair fitted to the table's ScoreMatrix
        reconcile: Reconcile mode (relative-order preservation by default)

    Returns:
        PreferenceTable whose rows are permutations of all counterparts
    """
    reconstructed = factors.reconstruct()
    if reconstructed.shape != (original.agent_count, original.counterpart_count):
        raise ValidationError(
            f"Factors reconstruct {reconstructed.shape}, table is "
            f"{(original.agent_count, original.counterpart_count)}"
        )
    rows = tuple(
        densify_row(stated, reconstructed[agent], reconcile)
        for agent, stated in enumerate(original.rows)
    )
    return PreferenceTable(original.side, rows, original.counterpart_count)


def _densify_side(table, cfg):
    factors = nnmf(ranks_to_scores(table), cfg)
    return densify(table, factors, cfg.reconcile), factors


def densify_market(cand_prefs, emp_prefs, cfg=None):
    """Factorize each side independently and densify both tables."""
    require_market(cand_prefs, emp_prefs)
    cfg = cfg or LmfConfig()
    with ThreadPoolExecutor(max_workers=2) as pool:
        cand_job = pool.submit(_densify_side, cand_prefs, cfg)
        emp_job = pool.submit(_densify_side, emp_prefs, cfg)
        dense_cand, cand_factors = cand_job.result()
        dense_emp, emp_factors = emp_job.result()
    return DenseMarket(dense_cand, dense_emp, cand_factors, emp_factors)


def _tag_provenance(side_matches, stated):
    stated_sets = [set(row) for row in stated.rows]
    prov = tuple(
        tuple(
            Provenance.STATED if cp < 0 or cp in stated_sets[agent] else Provenance.INFERRED
            for cp in row
        )
        for agent, row in enumerate(side_matches.rows)
    )
    return SideMatches(side_matches.side, side_matches.rows, prov, side_matches.counterpart_count)


def lmf_mmdaa(cand_prefs, emp_prefs, mcfg=None, lcfg=None, dense=None):
    """
    Run Normal MMDAA on densified tables.

    Args:
        cand_prefs: Stated candidate PreferenceTable
        emp_prefs: Stated employer PreferenceTable
        mcfg: MmdaaConfig
        lcfg: LmfConfig
        dense: Precomputed DenseMarket for these tables, if any

    Returns:
        MultiMatching whose cells are Stated when the counterpart appears
        in the agent's original row and Inferred otherwise
    """
    if dense is None:
        dense = densify_market(cand_prefs, emp_prefs, lcfg)
    result = normal_mmdaa(dense.cand_prefs, dense.emp_prefs, mcfg)
    return MultiMatching(
        _tag_provenance(result.candidates, cand_prefs),
        _tag_provenance(result.employers, emp_prefs),
        label='lmf',
    )
