"""Randomized extreme-point identification by random linear functionals.

Each standard-normal direction g is maximized and minimized over the rows of
X; both optima are extreme points of the convex hull of the rows.  Repeating
with m independent directions finds every extreme point with probability
at least 1 - k * (1 - 2*min_i omega_i)^m, where omega_i is the solid angle of
the normal cone at extreme point i.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _rng
from .matrix_io import require_matrix

# Functionals are generated and scored in column blocks of this size so G is
# never fully materialized for large m.
_FUNCTIONAL_BLOCK = 512


@dataclass(frozen=True)
class PursuitConfig:
    """Configuration for pursuit runs.

    m: number of random functionals (fixed-m algorithm).
    seed: stream seed; identical seeds give identical functionals everywhere.
    batch: functionals per round of the adaptive algorithm (defaults to m).
    normalize_rows: scale each row to unit l2 norm before pursuit.  Changes
        which rows are extreme; off by default.
    """

    m: int
    seed: int = 0
    batch: int | None = None
    normalize_rows: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.batch is not None and self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")

    @property
    def round_size(self) -> int:
        return self.m if self.batch is None else self.batch


@dataclass(frozen=True)
class ExtremeSet:
    """Indices found by pursuit with per-index vote counts.

    ``votes[i]`` counts the functionals at which row i attained the max or the
    min; the counts over all indices sum to exactly 2m.
    """

    indices: tuple[int, ...]
    votes: dict[int, int]

    def __post_init__(self):
        if tuple(sorted(set(self.indices))) != self.indices:
            raise ValueError("indices must be sorted and distinct")
        if set(self.votes) != set(self.indices):
            raise ValueError("votes keys must match indices")


def _extreme_set_from_counts(counts: np.ndarray) -> ExtremeSet:
    idx = np.flatnonzero(counts)
    return ExtremeSet(
        indices=tuple(int(i) for i in idx),
        votes={int(i): int(counts[i]) for i in idx},
    )


def linear_scores(rows: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Evaluate the functionals (columns of G) at each row: returns rows @ G.

    Computed as a stack of per-row products so every row's scores are bitwise
    identical no matter how the rows are partitioned across workers; a plain
    gemm re-blocks by shape and may differ in the last ulp between a slice and
    the full matrix, which would break exact serial/distributed equality.
    """
    return np.matmul(rows[:, None, :], G)[:, 0, :]


def _prepared_rows(X, cfg: PursuitConfig) -> np.ndarray:
    X = require_matrix(X, name="X")
    if X.shape[0] < 1:
        raise ValueError("X must have at least one row")
    if cfg.normalize_rows:
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0  # zero rows stay put
        X = X / norms
    return X


def _tally_block(X: np.ndarray, seed: int, first: int, count: int, counts: np.ndarray):
    """Score functionals [first, first+count) and add max/min votes into counts.

    Returns the winning (max_idx, min_idx) arrays for the block.  np.argmax /
    np.argmin take the first occurrence, which is the lowest-index tie-break.
    """
    G = _rng.functionals(seed, first, count, X.shape[1])
    S = linear_scores(X, G)
    max_idx = np.argmax(S, axis=0)
    min_idx = np.argmin(S, axis=0)
    np.add.at(counts, max_idx, 1)
    np.add.at(counts, min_idx, 1)
    return max_idx, min_idx


def pursue(X, cfg: PursuitConfig) -> ExtremeSet:
    """Find extreme points of the row cloud with cfg.m random functionals.

    For each functional g_j, the rows attaining max_i x_i.g_j and
    min_i x_i.g_j are recorded (ties broken toward the lowest row index).
    Every returned index is an extreme point of the convex hull of the rows,
    except that exact duplicates of an extreme row can also collect votes;
    rows are not deduplicated.
    """
    X = _prepared_rows(X, cfg)
    counts = np.zeros(X.shape[0], dtype=np.int64)
    done = 0
    while done < cfg.m:
        b = min(_FUNCTIONAL_BLOCK, cfg.m - done)
        _tally_block(X, cfg.seed, done, b, counts)
        done += b
    return _extreme_set_from_counts(counts)


def pursue_adaptive(X, cfg: PursuitConfig, rounds_patience: int = 1) -> ExtremeSet:
    """Adaptive pursuit: rounds of cfg.batch functionals until nothing new appears.

    Stops after ``rounds_patience`` consecutive rounds contribute no index not
    already seen (default 1: the first empty round stops the run).  Votes from
    every round, including the stopping rounds, are tallied.  The number of
    rounds taken is recoverable as sum(votes.values()) // (2 * batch).
    """
    if rounds_patience < 1:
        raise ValueError(f"rounds_patience must be >= 1, got {rounds_patience}")
    X = _prepared_rows(X, cfg)
    batch = cfg.round_size
    counts = np.zeros(X.shape[0], dtype=np.int64)
    seen = np.zeros(X.shape[0], dtype=bool)
    empty_rounds = 0
    round_no = 0
    while empty_rounds < rounds_patience:
        max_idx, min_idx = _tally_block(X, cfg.seed, round_no * batch, batch, counts)
        new = ~seen[max_idx]
        seen[max_idx] = True
        new_min = ~seen[min_idx]
        seen[min_idx] = True
        empty_rounds = 0 if (new.any() or new_min.any()) else empty_rounds + 1
        round_no += 1
    return _extreme_set_from_counts(counts)


def posterior_missed_mass(batch: int, alpha: float) -> float:
    """Upper confidence bound on the total solid angle of missed extreme points.

    After a stopping round of ``batch`` consecutive failures to find anything
    new, the total normal-cone mass of whatever was missed is at most
    log(1/alpha) / (2 * batch) with probability 1 - alpha.
    """
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return math.log(1.0 / alpha) / (2.0 * batch)


def select_top_voted(es: ExtremeSet, k: int) -> list[int]:
    """The k indices with the highest vote counts (ties toward lower index).

    If fewer than k indices were found, returns all of them and emits a
    RuntimeWarning.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = sorted(es.votes.items(), key=lambda kv: (-kv[1], kv[0]))
    if len(ranked) < k:
        warnings.warn(
            f"only {len(ranked)} indices available, fewer than requested k={k}",
            RuntimeWarning,
            stacklevel=2,
        )
    return [i for i, _ in ranked[:k]]
