"""Simulation harnesses behind the CLI subcommands.

Everything here is deterministic given the run seed: each trial derives its
own instance and pursuit seeds from (seed, trial index), so results do not
depend on execution order or thread count.  The ARCHPURSUIT_THREADS
environment variable caps trial-level parallelism.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .distributed import ExecutionTrace, Partition, distributed_weights, run_distributed
from .extreme_points import ExtremeSet, PursuitConfig, pursue, pursue_adaptive, select_top_voted
from .glasso import (
    GroupLassoProblem,
    default_lambda_grid,
    lambda_max,
    select_by_persistence,
    solve_path,
)
from .matrix_io import gen_hilbert_separable, gen_noisy_pairs, gen_uniform_separable, require_matrix
from .nnls import nnls_fit

GENERATORS = {
    "uniform": gen_uniform_separable,
    "hilbert": gen_hilbert_separable,
}


def max_threads(default: int = 2) -> int:
    """Trial-level parallelism, capped by ARCHPURSUIT_THREADS."""
    cap = os.environ.get("ARCHPURSUIT_THREADS")
    limit = os.cpu_count() or 1
    if cap is not None:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise ValueError(f"ARCHPURSUIT_THREADS must be an integer, got {cap!r}")
    return max(1, min(default, limit))


def _run_trials(fn, n_trials: int, threads: int):
    """Run fn(trial_index) for each trial, results ordered by index."""
    if threads <= 1 or n_trials <= 1:
        return [fn(t) for t in range(n_trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_trials)))


# ---------------------------------------------------------------------------
# Exact-recovery sweep


@dataclass(frozen=True)
class SweepSpec:
    """Grid of (k, multiplier) cells; m = ceil(c * k * ln k) per multiplier c."""

    k_values: tuple[int, ...]
    multipliers: tuple[float, ...]
    trials: int = 100
    n: int = 500
    p: int = 1000
    generator: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(k < 2 for k in self.k_values):
            raise ValueError("all k values must be >= 2")
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")


@dataclass(frozen=True)
class SweepResult:
    # rows: (k, multiplier, m, trials, recovery_fraction)
    grid: list[tuple[int, float, int, int, float]]
    # rows: (k, log_k_reference, smallest multiplier reaching >= 0.95 or nan)
    isoclines: list[tuple[int, float, float]]


def recovery_fraction(
    generator: str, n: int, p: int, k: int, m: int, trials: int, seed: int
) -> float:
    """Fraction of trials in which pursuit returns exactly the true extreme rows."""
    gen = GENERATORS[generator]
    truth = frozenset(range(k))

    def one(trial: int) -> bool:
        inst_seed = _rng.child_seed(seed, _rng.DOMAIN_TRIALS, 2 * trial)
        run_seed = _rng.child_seed(seed, _rng.DOMAIN_TRIALS, 2 * trial + 1)
        inst = gen(n, p, k, inst_seed)
        es = pursue(inst.X, PursuitConfig(m=m, seed=run_seed))
        return frozenset(es.indices) == truth

    hits = _run_trials(one, trials, max_threads())
    return sum(hits) / trials


def run_sweep(spec: SweepSpec) -> SweepResult:
    grid = []
    isoclines = []
    for ki, k in enumerate(spec.k_values):
        best_c = math.nan
        for ci, c in enumerate(spec.multipliers):
            m = math.ceil(c * k * math.log(k))
            cell_seed = _rng.child_seed(
                spec.seed, _rng.DOMAIN_TRIALS, ki * len(spec.multipliers) + ci
            )
            frac = recovery_fraction(
                spec.generator, spec.n, spec.p, k, m, spec.trials, cell_seed
            )
            grid.append((k, float(c), m, spec.trials, frac))
            if math.isnan(best_c) and frac >= 0.95:
                best_c = float(c)
        isoclines.append((k, math.log(k), best_c))
    return SweepResult(grid=grid, isoclines=isoclines)


# ---------------------------------------------------------------------------
# Noise experiments


def _fit_residual_per_row(X: np.ndarray, rows: list[int]) -> float:
    """||X - W X[rows]||_F / n after an NNLS fit against the selected rows."""
    sol = nnls_fit(X, X[rows], tol=1e-6, max_iter=2000)
    return float(np.linalg.norm(X - sol.W @ X[rows])) / X.shape[0]


def _quiet_top_voted(es: ExtremeSet, k: int) -> list[int]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return select_top_voted(es, k)


def noise_cell(
    k: int, p: int, m: int, epsilon: float, trials: int, seed: int, select_k: int
) -> float:
    """Mean pursuit+vote+NNLS residual over fresh noisy-pairs instances."""

    def one(trial: int) -> float:
        inst_seed = _rng.child_seed(seed, _rng.DOMAIN_TRIALS, 2 * trial)
        run_seed = _rng.child_seed(seed, _rng.DOMAIN_TRIALS, 2 * trial + 1)
        X = gen_noisy_pairs(p, k, epsilon, inst_seed)
        es = pursue(X, PursuitConfig(m=m, seed=run_seed))
        top = sorted(_quiet_top_voted(es, select_k))
        return _fit_residual_per_row(X, top)

    vals = _run_trials(one, trials, max_threads())
    return float(np.mean(vals))


def glasso_noise_cell(
    k: int,
    p: int,
    m: int,
    epsilon: float,
    trials: int,
    seed: int,
    select_k: int,
    grid_points: int = 30,
) -> float:
    """As noise_cell but selecting rows by group-lasso path persistence."""

    def one(trial: int) -> float:
        inst_seed = _rng.child_seed(seed, _rng.DOMAIN_TRIALS, 2 * trial)
        run_seed = _rng.child_seed(seed, _rng.DOMAIN_TRIALS, 2 * trial + 1)
        X = gen_noisy_pairs(p, k, epsilon, inst_seed)
        es = pursue(X, PursuitConfig(m=m, seed=run_seed))
        cand = list(es.indices)
        if len(cand) <= select_k:
            chosen = cand
        else:
            lam_hi = lambda_max(X, X[cand])
            prob = GroupLassoProblem(
                X, X[cand], default_lambda_grid(lam_hi, num=grid_points)
            )
            path = solve_path(prob, tol=1e-7, max_iter_per_lambda=1000)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                picked = select_by_persistence(path, select_k)
            chosen = [cand[g] for g in picked]
        return _fit_residual_per_row(X, sorted(chosen))

    vals = _run_trials(one, trials, max_threads())
    return float(np.mean(vals))


@dataclass(frozen=True)
class NoiseSpec:
    k: int = 20
    p: int = 1000
    multipliers: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 20.0)
    eps_grid: tuple[float, ...] = field(
        default_factory=lambda: tuple(np.geomspace(1e-4, 1e-1, 10))
    )
    trials: int = 50
    select_k: int = 20
    seed: int = 0


def run_noise(spec: NoiseSpec, selector: str = "vote", grid_points: int = 30):
    """Residual grid rows (multiplier, m, epsilon, mean_residual, log10)."""
    rows = []
    cell = 0
    for c in spec.multipliers:
        m = math.ceil(c * spec.k * math.log(spec.k))
        for eps in spec.eps_grid:
            cell_seed = _rng.child_seed(spec.seed, _rng.DOMAIN_TRIALS, cell)
            cell += 1
            if selector == "vote":
                r = noise_cell(
                    spec.k, spec.p, m, eps, spec.trials, cell_seed, spec.select_k
                )
            elif selector == "glasso":
                r = glasso_noise_cell(
                    spec.k,
                    spec.p,
                    m,
                    eps,
                    spec.trials,
                    cell_seed,
                    spec.select_k,
                    grid_points,
                )
            else:
                raise ValueError(f"unknown selector {selector!r}")
            rows.append((float(c), m, float(eps), r, math.log10(r) if r > 0 else -math.inf))
    return rows


# ---------------------------------------------------------------------------
# Vote scree


def run_scree(X, m: int, repeats: int, seed: int) -> np.ndarray:
    """Sorted vote fractions per repeat: row r = votes of run r, sorted
    descending and normalized by that run's maximum."""
    X = require_matrix(X, "X")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    n = X.shape[0]
    out = np.zeros((repeats, n))
    for r in range(repeats):
        run_seed = _rng.child_seed(seed, _rng.DOMAIN_TRIALS, r)
        es = pursue(X, PursuitConfig(m=m, seed=run_seed))
        votes = np.zeros(n)
        for i, v in es.votes.items():
            votes[i] = v
        votes[::-1].sort()
        out[r] = votes / votes[0]
    return out


# ---------------------------------------------------------------------------
# Nearest-archetype classification


def classify_rows(X, archetype_indices) -> np.ndarray:
    """Label each row with the nearest archetype row (squared l2 distance).

    Ties go to the lowest archetype row index.
    """
    X = require_matrix(X, "X")
    arch = np.unique(np.asarray(archetype_indices, dtype=np.int64))
    if arch.size == 0:
        raise ValueError("archetype_indices must be nonempty")
    if arch.min() < 0 or arch.max() >= X.shape[0]:
        raise ValueError("archetype index out of range")
    A = X[arch]
    # Squared distances via expansion; ascending archetype order makes the
    # argmin's first-occurrence rule the lowest-index tie-break.
    d2 = (
        np.einsum("ij,ij->i", X, X)[:, None]
        - 2.0 * X @ A.T
        + np.einsum("ij,ij->i", A, A)[None, :]
    )
    return arch[np.argmin(d2, axis=1)]


# ---------------------------------------------------------------------------
# End-to-end pipeline


@dataclass(frozen=True)
class FactorizeResult:
    indices: list[int]
    W: np.ndarray
    relative_residual: float
    passes: int
    elapsed_seconds: float
    m_used: int
    trace: ExecutionTrace
    # Populated only for glasso selection: the solved path and the global row
    # index of each candidate group.
    lasso_path: object = None
    candidates: tuple[int, ...] = ()


def factorize(
    X,
    m: int,
    seed: int = 0,
    adaptive: bool = False,
    select: str = "vote",
    k: int | None = None,
    workers: int = 1,
    normalize: bool = False,
) -> FactorizeResult:
    """pursuit -> selection -> NNLS weights, with pass accounting.

    With adaptive=True, m is the per-round batch of the stopping-rule
    algorithm (workers must be 1); otherwise exactly m functionals are used,
    optionally across `workers` simulated workers.  Selection is by vote count
    (k=None keeps every found index) or by group-lasso persistence (k
    required).
    """
    X = require_matrix(X, "X")
    t0 = time.perf_counter()
    trace = ExecutionTrace()
    part = Partition.contiguous(X.shape[0], workers)
    cfg = PursuitConfig(m=m, seed=seed, batch=m if adaptive else None, normalize_rows=normalize)
    if adaptive:
        if workers != 1:
            raise ValueError("adaptive pursuit runs on a single worker")
        es = pursue_adaptive(X, cfg)
        m_used = sum(es.votes.values()) // 2
        trace.record_pass(part, 0)
    else:
        es = run_distributed(X, part, cfg, trace)
        m_used = m
    path = None
    cand = ()
    if select == "vote":
        chosen = sorted(es.indices) if k is None else sorted(_quiet_top_voted(es, k))
    elif select == "glasso":
        if k is None:
            raise ValueError("glasso selection requires k")
        cand = tuple(es.indices)
        lam_hi = lambda_max(X, X[list(cand)])
        prob = GroupLassoProblem(X, X[list(cand)], default_lambda_grid(lam_hi))
        path = solve_path(prob)
        if len(cand) <= k:
            chosen = sorted(cand)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                chosen = sorted(cand[g] for g in select_by_persistence(path, k))
    else:
        raise ValueError(f"unknown selector {select!r}")
    W = distributed_weights(X, part, chosen, trace=trace)
    norm_x = float(np.linalg.norm(X))
    rel = float(np.linalg.norm(X - W @ X[chosen])) / (norm_x if norm_x > 0 else 1.0)
    return FactorizeResult(
        indices=list(chosen),
        W=W,
        relative_residual=rel,
        passes=trace.passes,
        elapsed_seconds=time.perf_counter() - t0,
        m_used=m_used,
        trace=trace,
        lasso_path=path,
        candidates=cand,
    )
