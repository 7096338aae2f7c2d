"""Condition-number machinery: solid angles, simplicial constants, sample bounds.

The solid angle omega_i of the normal cone at extreme point i is the
probability that a random Gaussian direction is maximized at that point; the
omega_i over all extreme points sum to one, and each lies in [0, 1/2).  The
number of random functionals needed to find everything scales like
kappa * log(k/delta) with kappa = 1 / log(1 / max_i(1 - 2*omega_i)).

Also includes numeric verification of the spherical-cap area bounds and of
the two inequalities tying solid angles to simplicial constants (the distance
from an extreme point to the hull of the others), on synthetic polytopes with
known vertex adjacency.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .matrix_io import require_matrix
from .nnls import power_iteration

_SAMPLE_BLOCK = 8192


# ---------------------------------------------------------------------------
# Solid angles


def estimate_solid_angles(
    X, ext_indices, samples: int = 100_000, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo solid angles of the normal cones at the given rows.

    For each Gaussian direction z, the row with the strictly largest score
    z.x_i gets the sample; ties (measure zero) count for nobody.  Returns
    (omega_hat, standard_errors) aligned with ext_indices.  A candidate row
    that is not actually extreme simply estimates to zero.
    """
    X = require_matrix(X, "X")
    ext_indices = np.asarray(ext_indices, dtype=np.int64)
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    n, p = X.shape
    wins = np.zeros(n, dtype=np.int64)
    done = 0
    while done < samples:
        b = min(_SAMPLE_BLOCK, samples - done)
        Z = _rng.gaussian_rows(seed, _rng.DOMAIN_ANGLES, done, b, p)
        S = Z @ X.T
        top = S.max(axis=1)
        unique = (S == top[:, None]).sum(axis=1) == 1
        winners = np.argmax(S, axis=1)[unique]
        np.add.at(wins, winners, 1)
        done += b
    omega = wins[ext_indices] / samples
    se = np.sqrt(omega * (1.0 - omega) / samples)
    return omega, se


def condition_kappa(omega) -> tuple[float, float]:
    """(kappa, kappa_bar) from per-point solid angles.

    kappa = 1 / log(1 / max_i(1 - 2*omega_i)); kappa_bar = kappa / k.
    All omega = 1/2 (a segment) gives kappa = 0: any single functional finds
    both endpoints.
    """
    omega = np.asarray(omega, dtype=np.float64)
    if omega.size == 0:
        raise ValueError("omega must be nonempty")
    if (omega <= 0).any():
        raise ValueError("omega entries must be positive")
    if (omega > 0.5).any():
        raise ValueError("omega entries cannot exceed 1/2")
    worst = float((1.0 - 2.0 * omega).max())
    if worst == 0.0:
        return 0.0, 0.0
    kappa = 1.0 / math.log(1.0 / worst)
    return kappa, kappa / omega.size


def required_m(omega, k: int, delta: float) -> int:
    """Functional count ceil(kappa * log(k/delta)) guaranteeing full recovery
    with probability at least 1 - delta (never less than 1)."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    kappa, _ = condition_kappa(omega)
    return max(1, math.ceil(kappa * math.log(k / delta)))


# ---------------------------------------------------------------------------
# Simplicial constants


def _nearest_in_hull(h: np.ndarray, A: np.ndarray, tol: float) -> tuple[float, np.ndarray]:
    """min_s ||h - A^T s|| over the probability simplex, by accelerated
    projected gradient with exact simplex projection.  Returns (distance, s)."""
    r = A.shape[0]
    AAt = A @ A.T
    Ah = A @ h
    L = 1.01 * power_iteration(AAt)
    if L <= 0.0:
        # All candidate points at the origin.
        s = np.full(r, 1.0 / r)
        return float(np.linalg.norm(h)), s
    s = np.full(r, 1.0 / r)
    y = s.copy()
    mom = 1.0
    obj = 0.5 * float(s @ (AAt @ s)) - float(Ah @ s)
    # Rounding-aware slack for the monotone test (see nnls.py).
    slack = 32.0 * np.finfo(np.float64).eps * (float(np.abs(AAt).max()) + float(h @ h) + 1.0)
    for _ in range(20000):
        grad = AAt @ y - Ah
        v = project_simplex(y - grad / L)
        new_obj = 0.5 * float(v @ (AAt @ v)) - float(Ah @ v)
        if new_obj > obj + slack:
            y, mom = s.copy(), 1.0
            continue
        mom_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * mom * mom))
        y = v + ((mom - 1.0) / mom_next) * (v - s)
        s, mom, obj = v, mom_next, new_obj
        # Fixed-point certificate: s is optimal iff it equals its own
        # projected gradient step.
        step = project_simplex(s - (AAt @ s - Ah) / L)
        if float(np.abs(step - s).max()) <= tol:
            break
    return float(np.linalg.norm(h - A.T @ s)), s


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, v.size + 1) > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def simplicial_constant(X, ext_indices, i: int, tol: float = 1e-8) -> float:
    """Distance from extreme row i to the convex hull of the other extreme rows."""
    X = require_matrix(X, "X")
    ext_indices = [int(j) for j in ext_indices]
    if len(ext_indices) < 2:
        raise ValueError("need at least two extreme points")
    if i not in ext_indices:
        raise ValueError(f"index {i} is not among the extreme indices")
    others = [j for j in ext_indices if j != i]
    alpha, _ = _nearest_in_hull(X[i], X[others], tol)
    return alpha


# ---------------------------------------------------------------------------
# Geometry report


@dataclass(frozen=True)
class GeometryReport:
    """Per-extreme-point diagnostics plus the derived condition numbers."""

    ext_indices: tuple[int, ...]
    omega_hat: np.ndarray
    omega_se: np.ndarray
    alpha_hat: np.ndarray
    kappa: float
    kappa_bar: float
    delta: float
    m_required: int


def geometry_report(
    X,
    ext_indices,
    samples: int = 100_000,
    seed: int = 0,
    delta: float = 0.05,
    alpha_tol: float = 1e-8,
) -> GeometryReport:
    X = require_matrix(X, "X")
    ext = [int(j) for j in ext_indices]
    omega, se = estimate_solid_angles(X, ext, samples=samples, seed=seed)
    alpha = np.array(
        [simplicial_constant(X, ext, j, tol=alpha_tol) for j in ext]
        if len(ext) >= 2
        else [np.nan for _ in ext]
    )
    # Guard the kappa formula against zero or > 1/2 estimates from MC noise.
    clipped = np.clip(omega, 0.5 / samples, 0.5)
    kappa, kappa_bar = condition_kappa(clipped)
    m_req = required_m(clipped, len(ext), delta)
    return GeometryReport(
        ext_indices=tuple(ext),
        omega_hat=omega,
        omega_se=se,
        alpha_hat=alpha,
        kappa=kappa,
        kappa_bar=kappa_bar,
        delta=delta,
        m_required=m_req,
    )


# ---------------------------------------------------------------------------
# Spherical-cap bounds


@dataclass(frozen=True)
class CapBoundCheck:
    kind: str  # "lower" (by chordal radius) or "upper" (by height)
    p_dim: int
    parameter: float
    area: float
    se: float
    bound: float
    holds: bool


def cap_area_estimate(
    p_dim: int, height: float, samples: int, seed: int, first: int = 0
) -> tuple[float, float]:
    """Monte Carlo normalized area of the spherical cap {u : u_1 >= height}."""
    done = 0
    hits = 0
    while done < samples:
        b = min(_SAMPLE_BLOCK, samples - done)
        Z = _rng.gaussian_rows(seed, _rng.DOMAIN_CAPS, first + done, b, p_dim)
        U = Z / np.linalg.norm(Z, axis=1, keepdims=True)
        hits += int((U[:, 0] >= height).sum())
        done += b
    area = hits / samples
    return area, math.sqrt(area * (1.0 - area) / samples)


def check_cap_bounds(
    p_dim: int, trials: int = 8, samples: int = 50_000, seed: int = 0
) -> list[CapBoundCheck]:
    """Monte Carlo check of the cap-area bounds used in the recovery analysis.

    Lower bound: a cap of chordal radius r has area at least (1/2) (r/2)^(p-1).
    Upper bounds: a cap of height t has area at most (1 - t^2)^(p/2) on
    t in [0, 1/sqrt(2)] and at most (2t)^(-p) on t in [1/sqrt(2), 1).
    Assertions hold within 3 Monte Carlo standard errors.
    """
    if p_dim < 2:
        raise ValueError(f"p_dim must be >= 2, got {p_dim}")
    rng = _rng.generator(seed, _rng.DOMAIN_TRIALS)
    checks = []
    offset = 0
    # Zero-hit estimates have a degenerate binomial s.e.; the rule-of-three
    # limit 3/samples keeps the interval honest for areas below MC resolution.
    floor = 3.0 / samples
    for trial in range(trials):
        r = float(rng.uniform(0.05, 2.0))
        height = 1.0 - 0.5 * r * r  # chordal radius r <-> cap height
        area, se = cap_area_estimate(p_dim, height, samples, seed, first=offset)
        offset += samples
        bound = 0.5 * (r / 2.0) ** (p_dim - 1)
        holds = area + max(3 * se, floor) >= bound
        checks.append(CapBoundCheck("lower", p_dim, r, area, se, bound, holds))

        t = float(rng.uniform(0.0, 0.999))
        area, se = cap_area_estimate(p_dim, t, samples, seed, first=offset)
        offset += samples
        if t <= 1.0 / math.sqrt(2.0):
            bound = (1.0 - t * t) ** (p_dim / 2.0)
        else:
            bound = (1.0 / (2.0 * t)) ** p_dim
        holds = area - max(3 * se, floor) <= bound
        checks.append(CapBoundCheck("upper", p_dim, t, area, se, bound, holds))
    return checks


# ---------------------------------------------------------------------------
# Vertex polytopes with known combinatorics, and the angle/distance inequalities


@dataclass(frozen=True)
class VertexPolytope:
    """Full-dimensional polytope given by vertices and edge adjacency."""

    name: str
    vertices: np.ndarray
    neighbors: tuple[tuple[int, ...], ...]


def regular_simplex(k: int) -> VertexPolytope:
    """Regular simplex with k vertices, full-dimensional in R^(k-1)."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    E = np.eye(k) - np.full((k, k), 1.0 / k)
    # Orthonormal basis of the sum-zero hyperplane maps e_i - centroid into
    # R^(k-1); all pairwise distances stay sqrt(2).
    q, _ = np.linalg.qr(E[:, : k - 1])
    verts = E @ q
    nbrs = tuple(tuple(j for j in range(k) if j != i) for i in range(k))
    return VertexPolytope(f"simplex-k{k}", verts, nbrs)


def hypercube(d: int) -> VertexPolytope:
    """Unit hypercube in R^d; vertices adjacent iff they differ in one coordinate."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    verts = np.array(list(itertools.product((0.0, 1.0), repeat=d)))
    nbrs = []
    for i, v in enumerate(verts):
        nbrs.append(
            tuple(
                j
                for j, u in enumerate(verts)
                if np.sum(np.abs(u - v)) == 1.0
            )
        )
    return VertexPolytope(f"cube-d{d}", verts, tuple(nbrs))


def unit_square() -> VertexPolytope:
    return hypercube(2)


def needle_simplex(k: int, stretch: float) -> VertexPolytope:
    """Regular simplex with vertex 0 pulled away from the centroid by `stretch`.

    Combinatorics are unchanged; the pulled vertex gets a wide normal cone.
    """
    base = regular_simplex(k)
    verts = base.vertices.copy()
    centroid = verts.mean(axis=0)
    verts[0] = centroid + stretch * (verts[0] - centroid)
    return VertexPolytope(f"needle-k{k}-s{stretch:g}", verts, base.neighbors)


@dataclass(frozen=True)
class LemmaCheck:
    polytope: str
    vertex: int
    omega_hat: float
    omega_se: float
    alpha_hat: float
    r_max: float
    r_min: float | None
    alpha_bound: float | None
    alpha_bound_holds: bool | None
    omega_bound: float | None
    omega_bound_holds: bool | None
    note: str = ""


def _orthonormal_complement(a: np.ndarray) -> np.ndarray:
    """Columns form an orthonormal basis of the hyperplane orthogonal to a."""
    q, _ = np.linalg.qr(a.reshape(-1, 1), mode="complete")
    return q[:, 1:]


def _base_inradius(vertices: np.ndarray, i: int, alpha: float, a: np.ndarray):
    """Inscribed radius of the tangent-cone slice at distance alpha along a.

    Intersects the tangent cone at vertex i with the hyperplane through the
    projection point; returns the distance from that point to the slice
    boundary.  Supports slice dimension 1 (interval) and 2 (polygon); other
    dimensions return (None, note).
    """
    d = vertices.shape[1]
    h = vertices[i]
    rays = np.delete(vertices, i, axis=0) - h
    along = rays @ a
    if (along <= 1e-12).any():
        return None, "a ray does not cross the base plane"
    pts = alpha * rays / along[:, None]
    center = alpha * a
    B = _orthonormal_complement(a)
    u = (pts - center) @ B  # slice coordinates around the axis point
    if d - 1 == 1:
        lo, hi = float(u.min()), float(u.max())
        if not lo < 0.0 < hi:
            return None, "axis point outside the base interval"
        return min(-lo, hi), ""
    if d - 1 == 2:
        return _polygon_inradius_at_origin(u)
    return None, f"base dimension {d - 1} unsupported"


def _polygon_inradius_at_origin(u: np.ndarray):
    """Distance from the origin to the boundary of conv(u) in the plane."""
    from scipy.spatial import ConvexHull

    hull = ConvexHull(u)
    # hull.equations rows are (normal, offset) with normal.x + offset <= 0 inside;
    # at the origin that reduces to the offsets being negative.
    if not (hull.equations[:, 2] < -1e-12).all():
        return None, "axis point outside the base polygon"
    verts = u[hull.vertices]
    m = verts.shape[0]
    dmin = np.inf
    for e in range(m):
        pa, pb = verts[e], verts[(e + 1) % m]
        dmin = min(dmin, _point_segment_distance(np.zeros(2), pa, pb))
    return float(dmin), ""


def _point_segment_distance(q: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0.0 else float(np.clip((q - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(q - (a + t * ab)))


def alpha_upper_bound(omega: float, r_max: float, d: int) -> float:
    """Simplicial-constant bound from the solid angle: alpha <= R_max * f(r(omega)).

    r(omega) = 2 (2 omega)^(1/(d-1)); the bound is vacuous (+inf) once
    r(omega)^2 / 2 >= 1.
    """
    r = 2.0 * (2.0 * omega) ** (1.0 / (d - 1))
    denom = 1.0 - 0.5 * r * r
    if denom <= 0.0 or r * r > 4.0:
        return math.inf
    return r_max * r * math.sqrt(1.0 - 0.25 * r * r) / denom


def omega_upper_bound(alpha: float, r_min: float, d: int):
    """Solid-angle bound from the simplicial constant, when the cap is small enough.

    Valid when r_min^2 / (alpha^2 + r_min^2) >= 1/2; returns None otherwise.
    """
    t2 = r_min * r_min / (alpha * alpha + r_min * r_min)
    if t2 < 0.5:
        return None
    return (math.sqrt(alpha * alpha + r_min * r_min) / (2.0 * r_min)) ** d


def check_simplicial_lemmas(
    polytopes, samples: int = 200_000, seed: int = 0, alpha_tol: float = 1e-9
) -> list[LemmaCheck]:
    """Verify both solid-angle/simplicial-constant inequalities numerically.

    For every vertex of every polytope: estimate omega by Monte Carlo, solve
    for alpha, compute R_max = diam of the neighbor hull and r_min = inscribed
    radius of the tangent-cone slice, then assert

        alpha <= R_max * r(omega) sqrt(1 - r(omega)^2/4) / (1 - r(omega)^2/2)
        omega <= (sqrt(alpha^2 + r_min^2) / (2 r_min))^d   [when applicable]

    with 3-sigma Monte Carlo slack folded into omega.  Vertices whose bound
    preconditions fail are reported with a note instead of a verdict.
    """
    checks = []
    for poly in polytopes:
        V = require_matrix(poly.vertices, poly.name)
        r, d = V.shape
        ext = list(range(r))
        omega, se = estimate_solid_angles(V, ext, samples=samples, seed=seed)
        for i in range(r):
            nbrs = list(poly.neighbors[i])
            nb = V[nbrs]
            r_max = max(
                float(np.linalg.norm(nb[a] - nb[b]))
                for a in range(len(nbrs))
                for b in range(a + 1, len(nbrs))
            ) if len(nbrs) >= 2 else 0.0
            alpha, s = _nearest_in_hull(
                V[i], np.delete(V, i, axis=0), alpha_tol
            )
            note = ""
            r_min = None
            omega_bound = None
            omega_holds = None
            if alpha <= 1e-12:
                note = "vertex inside hull of others"
            else:
                proj = np.delete(V, i, axis=0).T @ s
                a = (proj - V[i]) / alpha
                r_min, note = _base_inradius(V, i, alpha, a)
                if r_min is not None:
                    omega_bound = omega_upper_bound(alpha, r_min, d)
                    if omega_bound is None:
                        note = "height precondition unmet"
                    else:
                        omega_holds = bool(omega[i] - 3 * se[i] <= omega_bound)
            ab = alpha_upper_bound(min(omega[i] + 3 * se[i], 0.5), r_max, d)
            checks.append(
                LemmaCheck(
                    polytope=poly.name,
                    vertex=i,
                    omega_hat=float(omega[i]),
                    omega_se=float(se[i]),
                    alpha_hat=alpha,
                    r_max=r_max,
                    r_min=r_min,
                    alpha_bound=ab,
                    alpha_bound_holds=bool(alpha <= ab),
                    omega_bound=omega_bound,
                    omega_bound_holds=omega_holds,
                    note=note,
                )
            )
    return checks
