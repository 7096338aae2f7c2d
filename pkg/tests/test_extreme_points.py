"""Pursuit correctness: soundness, votes, tie-breaks, adaptive stopping."""

import math

import numpy as np
import pytest

from archpursuit import (
    ExtremeSet,
    PursuitConfig,
    gen_uniform_separable,
    posterior_missed_mass,
    pursue,
    pursue_adaptive,
    select_top_voted,
)

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.9]])
SQUARE_PLUS_CENTER = np.array(
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]]
)


def mc_corner_angle_oracle(X, corner, samples=20_000, seed=123):
    """Independent Monte Carlo estimate of the normal-cone solid angle at a row."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((samples, X.shape[1]))
    S = Z @ X.T
    wins = (np.argmax(S, axis=1) == corner) & (
        (S == S.max(axis=1, keepdims=True)).sum(axis=1) == 1
    )
    return wins.mean()


def test_triangle_only_vertices_returned():
    for m in (1, 5, 50):
        es = pursue(TRIANGLE, PursuitConfig(m=m, seed=3))
        assert set(es.indices) <= {0, 1, 2}
        assert sum(es.votes.values()) == 2 * m


def test_segment_one_functional_returns_both_endpoints():
    X = np.array([[0.0], [1.0]])
    es = pursue(X, PursuitConfig(m=1, seed=0))
    assert es.indices == (0, 1)
    assert es.votes == {0: 1, 1: 1}


def test_square_center_never_wins_and_corner_votes_balance():
    # Oracle first: by symmetry each corner's normal cone is a quadrant, so
    # its solid angle is 1/4; the Monte Carlo estimate confirms it before the
    # vote-fraction assertion below relies on it.
    for corner in range(4):
        omega = mc_corner_angle_oracle(SQUARE_PLUS_CENTER, corner)
        assert omega == pytest.approx(0.25, abs=0.02)
    m = 200
    es = pursue(SQUARE_PLUS_CENTER, PursuitConfig(m=m, seed=17))
    assert 4 not in es.indices
    for corner in range(4):
        frac = es.votes.get(corner, 0) / (2 * m)
        assert frac == pytest.approx(0.25, abs=0.1)


def test_soundness_on_separable_instances():
    for seed in range(5):
        inst = gen_uniform_separable(60, 25, 6, seed=seed)
        es = pursue(inst.X, PursuitConfig(m=40, seed=seed + 100))
        assert set(es.indices) <= set(inst.true_extreme_indices)


def test_vote_total_is_2m_with_single_row():
    es = pursue(np.array([[3.0, 1.0]]), PursuitConfig(m=9, seed=1))
    assert es.indices == (0,)
    assert es.votes == {0: 18}


def test_affine_invariance_of_votes():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((30, 6))
    cfg = PursuitConfig(m=64, seed=9)
    base = pursue(X, cfg)
    shifted = pursue(2.5 * X + rng.standard_normal(6)[None, :], cfg)
    assert base == shifted


def test_determinism():
    X = np.asarray(gen_uniform_separable(40, 12, 5, seed=0).X)
    a = pursue(X, PursuitConfig(m=33, seed=4))
    b = pursue(X, PursuitConfig(m=33, seed=4))
    assert a == b
    c = pursue(X, PursuitConfig(m=33, seed=5))
    assert a != c


def test_duplicate_rows_lowest_index_wins():
    X = np.array([[0.0], [1.0], [1.0]])
    es = pursue(X, PursuitConfig(m=16, seed=2))
    # Row 2 duplicates row 1; the tie always resolves to row 1.
    assert 2 not in es.indices
    assert es.votes[1] == 16


def test_normalize_rows_makes_scale_irrelevant():
    rng = np.random.default_rng(8)
    X = rng.random((20, 4)) + 0.5
    scaled = X.copy()
    scaled[7] *= 50.0
    cfg = PursuitConfig(m=40, seed=1, normalize_rows=True)
    assert pursue(X, cfg) == pursue(scaled, cfg)


def test_empty_matrix_rejected():
    with pytest.raises(ValueError):
        pursue(np.empty((0, 3)), PursuitConfig(m=1))


def test_config_validation():
    with pytest.raises(ValueError):
        PursuitConfig(m=0)
    with pytest.raises(ValueError):
        PursuitConfig(m=5, batch=0)


# ---------------------------------------------------------------------------
# Adaptive algorithm


def test_adaptive_triangle_finds_all_three():
    # Oracle: each triangle vertex has a positive solid angle (MC check), so
    # the stopping rule cannot halt before all three are seen, with high
    # probability per round.
    angles = [mc_corner_angle_oracle(TRIANGLE, v, samples=10_000) for v in range(3)]
    assert min(angles) > 0.1
    es = pursue_adaptive(TRIANGLE, PursuitConfig(m=8, seed=21, batch=8))
    assert es.indices == (0, 1, 2)


def test_adaptive_single_point_stops_after_one_round():
    es = pursue_adaptive(np.array([[1.0, 2.0]]), PursuitConfig(m=4, seed=0, batch=4))
    assert es.indices == (0,)
    # Round 1 finds row 0 (new), round 2 adds nothing and stops: 2 rounds.
    assert sum(es.votes.values()) == 2 * 4 * 2


def test_adaptive_deterministic_with_round_count():
    X = np.asarray(gen_uniform_separable(50, 15, 5, seed=1).X)
    cfg = PursuitConfig(m=6, seed=13, batch=6)
    a = pursue_adaptive(X, cfg)
    b = pursue_adaptive(X, cfg)
    assert a == b
    rounds_a = sum(a.votes.values()) // (2 * 6)
    rounds_b = sum(b.votes.values()) // (2 * 6)
    assert rounds_a == rounds_b >= 2


def test_adaptive_patience_extends_rounds():
    X = TRIANGLE
    cfg = PursuitConfig(m=8, seed=3, batch=8)
    r1 = sum(pursue_adaptive(X, cfg, rounds_patience=1).votes.values())
    r3 = sum(pursue_adaptive(X, cfg, rounds_patience=3).votes.values())
    assert r3 == r1 + 2 * 8 * 2  # two extra stopping rounds


def test_adaptive_stopping_rule_confidence():
    # Statistical contract of the stopping rule: vertices whose normal-cone
    # angle is at least log(1/delta)/(2*batch) are all found in at least a
    # 1 - delta fraction of runs.  A thin polygon makes two vertices subtle
    # while the bound only covers the prominent ones.
    from test_geometry import polygon_exact_angles

    V = np.array([[0.0, 0.0], [1.0, -0.02], [2.0, 0.0], [1.0, 1.0]])
    omega = polygon_exact_angles(V)
    assert (omega > 0).all()  # convex position: every vertex is extreme
    batch = 12
    delta = 0.2
    threshold = posterior_missed_mass(batch, delta)
    covered = {i for i in range(4) if omega[i] >= threshold}
    assert covered and covered != set(range(4))  # the test must discriminate
    runs, failures = 400, 0
    for t in range(runs):
        es = pursue_adaptive(V, PursuitConfig(m=batch, seed=90_000 + t, batch=batch))
        failures += not covered <= set(es.indices)
    sigma = math.sqrt(delta * (1 - delta) / runs)
    assert failures / runs <= delta + 3 * sigma


# ---------------------------------------------------------------------------
# A-posteriori bound and vote selection


def test_posterior_missed_mass_values():
    assert posterior_missed_mass(100, 0.05) == pytest.approx(
        math.log(20.0) / 200.0, rel=1e-12
    )
    assert posterior_missed_mass(100, 0.05) == pytest.approx(0.014978, abs=1e-6)
    assert posterior_missed_mass(1, math.exp(-2.0)) == pytest.approx(1.0, rel=1e-12)
    assert posterior_missed_mass(50, 0.999999) < 1e-5  # alpha -> 1 limit


def test_posterior_missed_mass_errors():
    with pytest.raises(ValueError):
        posterior_missed_mass(0, 0.5)
    with pytest.raises(ValueError):
        posterior_missed_mass(10, 0.0)
    with pytest.raises(ValueError):
        posterior_missed_mass(10, 1.0)


def _es(votes):
    return ExtremeSet(indices=tuple(sorted(votes)), votes=votes)


def test_select_top_voted_by_count():
    assert select_top_voted(_es({5: 10, 2: 7, 9: 1}), 2) == [5, 2]


def test_select_top_voted_tie_breaks_by_index():
    assert select_top_voted(_es({1: 4, 3: 4}), 1) == [1]


def test_select_top_voted_underfull_warns():
    with pytest.warns(RuntimeWarning, match="fewer"):
        got = select_top_voted(_es({1: 2, 4: 1, 7: 3}), 5)
    assert got == [7, 1, 4]


def test_select_top_voted_k_zero_rejected():
    with pytest.raises(ValueError):
        select_top_voted(_es({1: 1}), 0)
