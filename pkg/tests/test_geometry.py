"""Solid angles, simplicial constants, sample-size formula, inequality checks."""

import math

import numpy as np
import pytest

from archpursuit import (
    PursuitConfig,
    check_cap_bounds,
    check_simplicial_lemmas,
    condition_kappa,
    estimate_solid_angles,
    gen_uniform_separable,
    geometry_report,
    hypercube,
    needle_simplex,
    pursue,
    regular_simplex,
    required_m,
    simplicial_constant,
    unit_square,
)
from archpursuit.geometry import cap_area_estimate

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


def test_square_corner_angles_quarter():
    omega, se = estimate_solid_angles(SQUARE, [0, 1, 2, 3], samples=100_000, seed=1)
    for o, s in zip(omega, se):
        assert abs(o - 0.25) <= 3 * s
    assert abs(omega.sum() - 1.0) <= 3 * np.sqrt((se**2).sum())


def test_segment_endpoints_half():
    X = np.array([[0.0], [1.0]])
    omega, se = estimate_solid_angles(X, [0, 1], samples=20_000, seed=2)
    for o, s in zip(omega, se):
        assert abs(o - 0.5) <= 3 * s


def test_simplex_angles_one_over_k():
    for k in (3, 5):
        poly = regular_simplex(k)
        omega, se = estimate_solid_angles(
            poly.vertices, list(range(k)), samples=100_000, seed=k
        )
        for o, s in zip(omega, se):
            assert abs(o - 1.0 / k) <= 3 * s


def test_interior_candidate_scores_zero():
    X = np.vstack([SQUARE, [[0.5, 0.5]]])
    omega, _ = estimate_solid_angles(X, [4], samples=5_000, seed=3)
    assert omega[0] == 0.0


def test_angles_consistent_with_pursuit_votes():
    # Same estimator through two different streams: vote fraction in pursuit
    # vs direct Monte Carlo; agree within 3 combined standard errors.
    inst = gen_uniform_separable(40, 12, 4, seed=5)
    m = 40_000
    es = pursue(inst.X, PursuitConfig(m=m, seed=11))
    omega, se = estimate_solid_angles(inst.X, [0, 1, 2, 3], samples=60_000, seed=12)
    for i in range(4):
        frac = es.votes.get(i, 0) / (2 * m)
        se_frac = math.sqrt(max(frac * (1 - frac), 1e-12) / (2 * m))
        assert abs(frac - omega[i]) <= 3 * math.hypot(se_frac, se[i])


def test_scale_invariance_same_counts():
    omega1, _ = estimate_solid_angles(SQUARE, [0, 1, 2, 3], samples=10_000, seed=7)
    omega2, _ = estimate_solid_angles(3.7 * SQUARE, [0, 1, 2, 3], samples=10_000, seed=7)
    assert np.array_equal(omega1, omega2)


def polygon_exact_angles(V):
    """Closed-form normal-cone angles of a convex polygon: the normal cone at
    a vertex spans the outward normals of its two edges, so its solid angle
    is the exterior angle over 2*pi.  Vertices must be in convex position,
    counterclockwise."""
    r = V.shape[0]
    omega = np.zeros(r)
    for i in range(r):
        a = V[i] - V[(i - 1) % r]
        b = V[(i + 1) % r] - V[i]
        cross = float(a[0] * b[1] - a[1] * b[0])
        interior = math.pi - math.atan2(cross, float(a @ b))
        omega[i] = (math.pi - interior) / (2.0 * math.pi)
    return omega


def test_polygon_angles_match_exact_formula():
    rng = np.random.default_rng(31)
    for _ in range(3):
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, 7))
        V = np.column_stack([np.cos(angles), np.sin(angles)])
        exact = polygon_exact_angles(V)
        assert exact.sum() == pytest.approx(1.0, abs=1e-12)
        omega, se = estimate_solid_angles(
            V, list(range(7)), samples=80_000, seed=int(rng.integers(1 << 30))
        )
        for o, s, e in zip(omega, se, exact):
            assert abs(o - e) <= 3 * max(s, 1e-4)


# ---------------------------------------------------------------------------
# Simplicial constants


def test_basis_simplex_closed_form():
    X = np.eye(3)
    alpha = simplicial_constant(X, [0, 1, 2], 0, tol=1e-10)
    assert alpha == pytest.approx(math.sqrt(1.5), abs=1e-6)


def test_two_points_distance():
    X = np.array([[0.0, 0.0], [3.0, 4.0]])
    for i in (0, 1):
        assert simplicial_constant(X, [0, 1], i) == pytest.approx(5.0, abs=1e-8)


def hull_distance_grid_oracle(h, others, step=1e-3):
    """Brute force over the boundary of a planar hull: every vertex pair,
    densely gridded."""
    best = np.inf
    r = others.shape[0]
    t = np.arange(0.0, 1.0 + 0.5 * step, step)[:, None]
    for a in range(r):
        for b in range(a + 1, r):
            seg = (1.0 - t) * others[a] + t * others[b]
            best = min(best, float(np.linalg.norm(seg - h, axis=1).min()))
    return best


def test_planar_polygon_matches_grid_oracle():
    rng = np.random.default_rng(21)
    for _ in range(3):
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, 10))
        radius = rng.uniform(0.8, 1.3)
        X = radius * np.column_stack([np.cos(angles), np.sin(angles)])
        i = int(rng.integers(0, 10))
        mine = simplicial_constant(X, list(range(10)), i, tol=1e-10)
        oracle = hull_distance_grid_oracle(X[i], np.delete(X, i, axis=0))
        assert mine == pytest.approx(oracle, abs=1e-3)


def test_simplicial_scale_covariance():
    rng = np.random.default_rng(4)
    X = rng.random((8, 5))
    ext = list(range(8))
    a1 = simplicial_constant(X, ext, 2, tol=1e-11)
    a2 = simplicial_constant(7.0 * X, ext, 2, tol=1e-11)
    assert a2 == pytest.approx(7.0 * a1, rel=1e-9)


def test_simplicial_errors():
    with pytest.raises(ValueError):
        simplicial_constant(np.eye(3), [0], 0)
    with pytest.raises(ValueError):
        simplicial_constant(np.eye(3), [0, 1], 2)


# ---------------------------------------------------------------------------
# Sample-size formula


def test_kappa_approaches_half_k():
    k = 100
    kappa, kappa_bar = condition_kappa(np.full(k, 1.0 / k))
    assert abs(kappa - k / 2.0) / (k / 2.0) <= 0.05
    assert kappa_bar == pytest.approx(kappa / k, rel=1e-12)


def test_required_m_square():
    m = required_m(np.full(4, 0.25), 4, 0.05)
    assert m == math.ceil(math.log(80.0) / math.log(2.0)) == 7


def test_required_m_segment_special_case():
    assert required_m([0.5, 0.5], 2, 0.1) == 1


def test_required_m_errors():
    with pytest.raises(ValueError):
        required_m([0.0, 0.5], 2, 0.05)
    with pytest.raises(ValueError):
        required_m([0.6], 1, 0.05)
    with pytest.raises(ValueError):
        required_m([0.25], 1, 1.5)


def test_required_m_empirical_miss_rate():
    # The bound must hold empirically: miss rate <= delta + 3 sigma over many
    # trials, for the square and a simplex (known angles) and a uniform
    # instance (estimated angles).
    delta = 0.1
    trials = 1500

    def miss_rate(X, truth, m):
        misses = 0
        for t in range(trials):
            es = pursue(X, PursuitConfig(m=m, seed=50_000 + t))
            misses += not truth <= set(es.indices)
        return misses / trials

    sigma = math.sqrt(delta * (1 - delta) / trials)

    m = required_m(np.full(4, 0.25), 4, delta)
    assert miss_rate(SQUARE, {0, 1, 2, 3}, m) <= delta + 3 * sigma

    poly = regular_simplex(5)
    m = required_m(np.full(5, 0.2), 5, delta)
    assert miss_rate(poly.vertices, set(range(5)), m) <= delta + 3 * sigma

    inst = gen_uniform_separable(50, 20, 5, seed=9)
    omega, _ = estimate_solid_angles(inst.X, list(range(5)), samples=50_000, seed=13)
    m = required_m(omega, 5, delta)
    assert miss_rate(inst.X, set(range(5)), m) <= delta + 3 * sigma


# ---------------------------------------------------------------------------
# Cap bounds


def test_cap_bounds_hold():
    for p_dim in (2, 3, 6):
        checks = check_cap_bounds(p_dim, trials=6, samples=20_000, seed=p_dim)
        assert len(checks) == 12
        assert all(c.holds for c in checks)


def test_cap_closed_form_p3():
    # In R^3 a cap of height t has exact normalized area (1 - t)/2.
    area, se = cap_area_estimate(3, 0.5, samples=100_000, seed=0)
    assert abs(area - 0.25) <= 3 * se
    assert 0.25 <= (1.0 - 0.5**2) ** 1.5  # the bound 0.6495... dominates


def test_cap_hemisphere_and_full_sphere():
    area, se = cap_area_estimate(4, 0.0, samples=50_000, seed=1)
    assert abs(area - 0.5) <= 3 * se  # hemisphere
    assert 0.5 <= (1.0 - 0.0) ** 2.0
    # Chordal radius 2 is the whole sphere: lower bound (1/2) * 1^(p-1).
    area, _ = cap_area_estimate(4, 1.0 - 0.5 * 2.0**2, samples=1_000, seed=2)
    assert area == 1.0
    assert area >= 0.5


# ---------------------------------------------------------------------------
# Angle/simplicial-constant inequalities on known polytopes


def test_lemma_checks_on_standard_shapes():
    shapes = [regular_simplex(4), unit_square(), needle_simplex(4, 5.0)]
    checks = check_simplicial_lemmas(shapes, samples=100_000, seed=3)
    assert all(c.alpha_bound_holds for c in checks)
    verified = [c for c in checks if c.omega_bound_holds is not None]
    assert verified, "no vertex admitted the solid-angle bound"
    assert all(c.omega_bound_holds for c in verified)


def test_needle_vertex_has_large_angle():
    checks = check_simplicial_lemmas(
        [needle_simplex(4, 8.0)], samples=50_000, seed=5
    )
    needle = checks[0]
    rest = [c.omega_hat for c in checks[1:]]
    assert needle.vertex == 0
    assert needle.omega_hat > max(rest)


def test_square_angle_bound_quantities():
    # Hand-computed for the unit square corner: alpha = r_min = sqrt(1/2),
    # height^2 = 1/2 exactly at the bound's precondition, omega bound = 1/2.
    checks = check_simplicial_lemmas([unit_square()], samples=20_000, seed=6)
    c = checks[0]
    assert c.alpha_hat == pytest.approx(math.sqrt(0.5), abs=1e-7)
    assert c.r_min == pytest.approx(math.sqrt(0.5), abs=1e-7)
    assert c.omega_bound == pytest.approx(0.5, abs=1e-6)
    assert c.r_max == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_cube_checks_run():
    checks = check_simplicial_lemmas([hypercube(3)], samples=30_000, seed=7)
    assert len(checks) == 8
    assert all(c.alpha_bound_holds for c in checks)


# ---------------------------------------------------------------------------
# Report


def test_geometry_report_square():
    rep = geometry_report(SQUARE, [0, 1, 2, 3], samples=30_000, seed=8, delta=0.05)
    assert abs(float(rep.omega_hat.sum()) - 1.0) <= 0.02
    assert rep.m_required >= 7 - 1  # near the exact-angle value
    assert rep.kappa == pytest.approx(1.0 / math.log(2.0), rel=0.05)
    assert np.allclose(rep.alpha_hat, math.sqrt(0.5), atol=1e-6)
