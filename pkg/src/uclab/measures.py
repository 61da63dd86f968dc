"""Discrete measures on [0, 1] and the variational inequality they certify.

The central object is the functional

    J(mu; lam) = E_{(p,q) ~ mu x mu}[H(p + q - pq)] - lam * E_{p ~ mu}[H(p)]

over probability measures mu on [0, 1] with mean at most u, evaluated at
lam = entropy_ratio_bound(u).  The analysis shows the minimizers are
supported on at most two atoms, one of them at 1, so certification splits
into (a) an exact scan of that two-atom family and (b) an independent local
search over measures on a location grid that must not find anything
materially below the scan.

The second-variation diagnostic works with

    F_mu(q) = 2 E_{p ~ mu}[H(p + q - pq)] - lam * H(q),

whose curvature signature is read off from G(q) = q(1-q) F_mu''(q):
G is strictly decreasing (outside measures supported on {0, 1}), so F_mu
is convex on an initial interval and concave after the sign change, which
is what pushes optimal mass onto two atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scalars import GOLDEN_THRESHOLD, binary_entropy, entropy_ratio_bound, union_prob

DEFAULT_SEED = 1729

WEIGHT_TOL = 1e-12
MEAN_SLACK = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure on [0, 1]."""

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        locs = np.asarray(self.locations, dtype=float)
        ws = np.asarray(self.weights, dtype=float)
        if locs.ndim != 1 or ws.shape != locs.shape or locs.size == 0:
            raise ValueError("locations and weights must be matching 1-d arrays")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(ws))):
            raise ValueError("atoms must be finite")
        if np.any(locs < 0.0) or np.any(locs > 1.0):
            raise ValueError("locations must lie in [0, 1]")
        if np.any(np.diff(locs) <= 0.0):
            raise ValueError("locations must be strictly increasing")
        if np.any(ws < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(ws.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must sum to 1")
        locs = locs.copy()
        ws = ws.copy()
        locs.setflags(write=False)
        ws.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", ws)

    @classmethod
    def from_pairs(cls, pairs) -> "DiscreteMeasure":
        """Build from (location, weight) pairs; sorts, merges duplicate
        locations, and drops zero-weight atoms."""
        acc = {}
        for x, w in pairs:
            acc[float(x)] = acc.get(float(x), 0.0) + float(w)
        locs = sorted(x for x, w in acc.items() if w > 0.0)
        if not locs:
            raise ValueError("measure needs positive total mass")
        return cls(np.array(locs), np.array([acc[x] for x in locs]))

    @classmethod
    def point(cls, x: float) -> "DiscreteMeasure":
        return cls(np.array([float(x)]), np.array([1.0]))

    @classmethod
    def two_atom(cls, v: float, w: float) -> "DiscreteMeasure":
        """Mass w at v and mass 1 - w at 1."""
        if not 0.0 <= w <= 1.0:
            raise ValueError("w must lie in [0, 1]")
        return cls.from_pairs([(v, w), (1.0, 1.0 - w)])

    def mean(self) -> float:
        return float(np.dot(self.locations, self.weights))

    def size(self) -> int:
        return int(self.locations.size)


@dataclass(frozen=True)
class ObjectiveReport:
    """Value and parts of the quadratic-minus-linear entropy functional."""

    quadratic: float
    linear: float
    lam: float
    value: float
    mean: float


def _union_entropy_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return binary_entropy(union_prob(x[:, None], y[None, :]))


def objective(mu: DiscreteMeasure, lam: float) -> ObjectiveReport:
    """Evaluate J(mu; lam) together with its two parts.

    quadratic = sum_ij w_i w_j H(x_i + x_j - x_i x_j);
    linear    = sum_i w_i H(x_i);
    value     = quadratic - lam * linear.
    """
    x, w = mu.locations, mu.weights
    quad = float(w @ _union_entropy_matrix(x, x) @ w)
    lin = float(np.dot(w, binary_entropy(x)))
    return ObjectiveReport(
        quadratic=quad,
        linear=lin,
        lam=float(lam),
        value=quad - float(lam) * lin,
        mean=mu.mean(),
    )


def linearized_objective(mu: DiscreteMeasure, nu: DiscreteMeasure, lam: float) -> float:
    """The bilinear probe 2 E_{mu x nu}[H(p + q - pq)] - lam * E_nu[H(q)].

    At nu = mu this equals objective(mu, lam).value plus the quadratic part
    of mu; minimizing it over feasible nu at a minimizer mu is the
    first-order stationarity test for J.
    """
    cross = float(mu.weights @ _union_entropy_matrix(mu.locations, nu.locations) @ nu.weights)
    lin = float(np.dot(nu.weights, binary_entropy(nu.locations)))
    return 2.0 * cross - float(lam) * lin


def two_atom_objective(v: float, w: float, lam: float) -> float:
    """J at the measure with mass w on v and 1 - w on 1:
    w^2 H(2v - v^2) - lam * w * H(v)."""
    v = float(v)
    w = float(w)
    if not 0.0 < v < 1.0:
        raise ValueError("v must lie strictly inside (0, 1)")
    if not 0.0 <= w <= 1.0:
        raise ValueError("w must lie in [0, 1]")
    return w * w * binary_entropy(union_prob(v, v)) - float(lam) * w * binary_entropy(v)


@dataclass(frozen=True)
class TwoAtomScanReport:
    """Minimum of the two-atom objective along the binding mean constraint."""

    u: float
    lam: float
    v_steps: int
    min_slack: float
    argmin_v: float


def two_atom_min_scan(u: float, v_steps: int = 1000, lam: float | None = None) -> TwoAtomScanReport:
    """Scan two-atom measures (mass at v and at 1) with mean pinned to u.

    For each v in a grid on [0, u] the weight w = (1 - u)/(1 - v) makes the
    mean exactly u, which is the binding case of the constraint mean <= u;
    the scan reports the minimum slack and its location.  The grid contains
    u and the golden threshold exactly so the analytic equality cases land
    on grid points; among slacks tied within 1e-12 the largest v is
    reported, since the trivial zero at v = 0 would otherwise mask them.
    """
    u = float(u)
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly inside (0, 1)")
    if v_steps < 2:
        raise ValueError("v_steps must be at least 2")
    if lam is None:
        lam = entropy_ratio_bound(u)
    vs = np.linspace(0.0, u, v_steps)
    if GOLDEN_THRESHOLD < u:
        vs = np.unique(np.append(vs, GOLDEN_THRESHOLD))
    w = (1.0 - u) / (1.0 - vs)
    slack = w * w * binary_entropy(union_prob(vs, vs)) - lam * w * binary_entropy(vs)
    lo = float(slack.min())
    near = np.nonzero(slack <= lo + 1e-12)[0]
    return TwoAtomScanReport(
        u=u,
        lam=float(lam),
        v_steps=int(vs.size),
        min_slack=lo,
        argmin_v=float(vs[near[-1]]),
    )


def f_mu(mu: DiscreteMeasure, lam: float, q) -> float | np.ndarray:
    """F_mu(q) = 2 E_{p ~ mu}[H(p + q - pq)] - lam * H(q) for q in (0, 1)."""
    arr = np.asarray(q, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0) or not np.all(np.isfinite(arr)):
        raise ValueError("q must lie strictly inside (0, 1)")
    flat = np.atleast_1d(arr)
    u_mat = union_prob(mu.locations[:, None], flat[None, :])
    val = 2.0 * (mu.weights @ binary_entropy(u_mat)) - float(lam) * binary_entropy(flat)
    if np.ndim(q) == 0:
        return float(val[0])
    return val.reshape(arr.shape)


def _curvature_indicator(mu: DiscreteMeasure, lam: float, q: np.ndarray) -> np.ndarray:
    """G(q) = q(1-q) F_mu''(q) = -2 E_p[(1-p) q / (p + q - pq)] + lam."""
    x, w = mu.locations[:, None], mu.weights[:, None]
    qq = q[None, :]
    frac = (1.0 - x) * qq / (x + qq - x * qq)
    return -2.0 * np.sum(w * frac, axis=0) + float(lam)


@dataclass(frozen=True)
class CurvatureReport:
    """Shape of F_mu read from the sign pattern of q(1-q) F_mu''(q)."""

    strictly_decreasing: bool
    inflection: float | None
    convex_then_concave: bool
    grid: int


def f_mu_structure_check(mu: DiscreteMeasure, lam: float, grid: int = 10000) -> CurvatureReport:
    """Verify the curvature signature of F_mu on a grid of (0, 1).

    Evaluates G(q) = q(1-q) F_mu''(q) in closed form, checks it is strictly
    decreasing, and estimates the sign-change location (the boundary between
    the convex and concave regions of F_mu) by linear interpolation.
    Measures supported entirely on {0, 1} are rejected: G is constant there.
    """
    if np.all((mu.locations <= 0.0) | (mu.locations >= 1.0)):
        raise ValueError("measure supported on {0, 1} has no curvature signature")
    qs = np.arange(1, grid + 1) / (grid + 1.0)
    g = _curvature_indicator(mu, lam, qs)
    decreasing = bool(np.all(np.diff(g) < 0.0))
    inflection = None
    sign_change = np.nonzero((g[:-1] > 0.0) & (g[1:] <= 0.0))[0]
    if sign_change.size:
        k = sign_change[0]
        # linear interpolation of the zero crossing
        t = g[k] / (g[k] - g[k + 1])
        inflection = float(qs[k] + t * (qs[k + 1] - qs[k]))
    convex_then_concave = decreasing and inflection is not None
    return CurvatureReport(
        strictly_decreasing=decreasing,
        inflection=inflection,
        convex_then_concave=convex_then_concave,
        grid=grid,
    )


@dataclass(frozen=True)
class LocalSearchReport:
    """Best measure found by seeded exchange-move descent."""

    best_value: float
    best_measure: DiscreteMeasure
    mean_cap: float
    two_point_with_top: bool
    restarts: int
    seed: int


def local_search_min(
    u: float,
    lam: float,
    atom_grid: int = 1000,
    restarts: int = 100,
    seed: int = DEFAULT_SEED,
    pool_size: int = 24,
    max_rounds: int = 200,
) -> LocalSearchReport:
    """Minimize J over measures on a location grid with mean at most u.

    Each restart draws a random sparse start from a pool of grid locations
    (the pool always contains 0, u, the golden threshold, and 1, so the
    analytic candidates are reachable), then repeatedly applies the best
    feasible exchange move - shifting some or all of one atom's mass onto
    another location without pushing the mean above u - until no move
    improves the value.  Restart r uses seed + r, so runs are reproducible
    and independent of how restarts are distributed over workers.

    The report flags whether the best measure concentrates at least
    1 - 1e-3 of its mass on at most two locations, one of them 1, which is
    the structure the two-atom analysis predicts for minimizers.
    """
    u = float(u)
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly inside (0, 1)")
    if restarts < 1 or atom_grid < 1:
        raise ValueError("restarts and atom_grid must be positive")
    grid = np.linspace(0.0, 1.0, atom_grid + 1)
    specials = np.array([0.0, u, GOLDEN_THRESHOLD, 1.0])
    best_val = np.inf
    best_x = best_w = None
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        picks = rng.choice(grid, size=min(pool_size, grid.size), replace=False)
        x = np.unique(np.concatenate([picks, specials]))
        m = x.size
        big_h = _union_entropy_matrix(x, x)
        h = binary_entropy(x)
        w = _random_feasible_start(rng, x, u)
        val = float(w @ big_h @ w - lam * np.dot(w, h))
        for _ in range(max_rounds):
            move = _best_exchange_move(x, w, big_h, h, lam, u)
            if move is None:
                break
            a, b, delta = move
            w[a] -= delta
            w[b] += delta
            if w[a] < 0.0:
                w[a] = 0.0
            val = float(w @ big_h @ w - lam * np.dot(w, h))
        if val < best_val:
            best_val = val
            keep = w > 0.0
            best_x, best_w = x[keep], w[keep]
    measure = DiscreteMeasure.from_pairs(zip(best_x, best_w / best_w.sum()))
    return LocalSearchReport(
        best_value=float(best_val),
        best_measure=measure,
        mean_cap=u,
        two_point_with_top=_is_two_point_with_top(measure),
        restarts=restarts,
        seed=seed,
    )


def _random_feasible_start(rng, x: np.ndarray, u: float) -> np.ndarray:
    m = x.size
    k = int(rng.integers(2, 6))
    idx = rng.choice(m, size=min(k, m), replace=False)
    w = np.zeros(m)
    w[idx] = rng.dirichlet(np.ones(idx.size))
    mean = float(np.dot(x, w))
    # drain mass into the lowest location (0 is always in the pool)
    for a in np.argsort(x)[::-1]:
        if mean <= u:
            break
        if x[a] <= 0.0 or w[a] <= 0.0:
            continue
        delta = min(w[a], (mean - u) / (x[a] - x[0]))
        w[a] -= delta
        w[0] += delta
        mean -= delta * (x[a] - x[0])
    return w


def _best_exchange_move(x, w, big_h, h, lam, u):
    """Best value-decreasing transfer of mass between two locations.

    Move deltas are the full or half mass of the source atom; the change in
    J is evaluated in closed form from the cached entropy matrix.  Returns
    (source, target, delta) or None when no move improves by more than
    1e-14.  Near-ties are resolved toward the largest target location,
    mirroring the push-to-the-boundary structure of the minimizers.
    """
    m = x.size
    mw = big_h @ w
    mean = float(np.dot(x, w))
    diag = np.diag(big_h)
    d_cross = mw[None, :] - mw[:, None]
    d_quad_curv = diag[:, None] - 2.0 * big_h + diag[None, :]
    d_lin = h[None, :] - h[:, None]
    d_mean = x[None, :] - x[:, None]
    best = None
    best_val = -1e-14
    for frac in (1.0, 0.5):
        delta = frac * w[:, None]
        dval = delta * (2.0 * d_cross - lam * d_lin) + delta * delta * d_quad_curv
        feasible = (delta > 0.0) & (mean + delta * d_mean <= u + MEAN_SLACK)
        np.fill_diagonal(feasible, False)
        if not feasible.any():
            continue
        masked = np.where(feasible, dval, np.inf)
        lo = float(masked.min())
        if lo >= best_val:
            continue
        near = np.argwhere(masked <= lo + 1e-15)
        a, b = max(near, key=lambda ab: x[ab[1]])
        best = (int(a), int(b), float(delta[a, 0]))
        best_val = lo
    return best


def _is_two_point_with_top(mu: DiscreteMeasure) -> bool:
    order = np.argsort(mu.weights)[::-1]
    top_two = set(np.asarray(mu.locations)[order[:2]])
    covered = float(mu.weights[order[:2]].sum())
    if mu.size() == 1:
        return True
    if covered < 1.0 - 1e-3:
        return False
    return 1.0 in top_two or float(mu.weights[order[1]]) <= 1e-3


@dataclass(frozen=True)
class LemmaCertificate:
    """Grid certificate that J stays nonnegative along the bound factor."""

    u_steps: int
    v_steps: int
    worst_slack: float
    worst_u: float
    argmin_v_at_worst: float
    scan_ok: bool
    search_points: int
    search_restarts: int
    worst_search_margin: float
    search_ok: bool
    seed: int
    lam_scale: float
    rows: tuple


def lemma_certificate(
    u_steps: int = 1000,
    v_steps: int = 1000,
    restarts: int = 1000,
    atom_grid: int = 1000,
    search_points: int = 21,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
    lam_scale: float = 1.0,
    scan_tol: float = 1e-9,
    search_tol: float = 1e-6,
) -> LemmaCertificate:
    """Certify min J >= 0 over a u-grid by scan plus independent search.

    For every u in an interior grid (the golden threshold is injected
    exactly) the two-atom scan must stay above -scan_tol, and on a coarser
    sub-grid the local search - restarts split evenly across the sub-grid -
    must not beat the scan minimum by more than search_tol.  lam_scale
    multiplies the bound factor and exists so a deliberately inflated
    factor can be seen to fail.
    """
    us = np.arange(1, u_steps + 1) / (u_steps + 1.0)
    us = np.unique(np.append(us, GOLDEN_THRESHOLD))
    lams = np.array([entropy_ratio_bound(float(u)) * lam_scale for u in us])

    scan_args = [(float(u), v_steps, float(lam)) for u, lam in zip(us, lams)]
    scans = parallel_map(_scan_task, scan_args, jobs)
    slacks = np.array([s.min_slack for s in scans])
    worst_idx = int(np.argmin(slacks))

    pick = np.unique(np.linspace(0, us.size - 1, min(search_points, us.size)).astype(int))
    star = int(np.argmin(np.abs(us - GOLDEN_THRESHOLD)))
    pick = np.unique(np.append(pick, star))
    per = max(1, restarts // pick.size)
    search_args = [
        (float(us[k]), float(lams[k]), atom_grid, per, seed + 1_000_003 * int(k))
        for k in pick
    ]
    searches = parallel_map(_search_task, search_args, jobs)
    margins = [scans[k].min_slack - s.best_value for k, s in zip(pick, searches)]
    worst_margin = float(max(margins))

    rows = tuple(
        {
            "u": float(u),
            "ratio_bound": float(lam),
            "min_slack": float(s.min_slack),
            "argmin_v": float(s.argmin_v),
        }
        for u, lam, s in zip(us, lams, scans)
    )
    return LemmaCertificate(
        u_steps=int(us.size),
        v_steps=v_steps,
        worst_slack=float(slacks[worst_idx]),
        worst_u=float(us[worst_idx]),
        argmin_v_at_worst=float(scans[worst_idx].argmin_v),
        scan_ok=bool(slacks[worst_idx] >= -scan_tol),
        search_points=int(pick.size),
        search_restarts=per * int(pick.size),
        worst_search_margin=worst_margin,
        search_ok=bool(worst_margin <= search_tol),
        seed=seed,
        lam_scale=float(lam_scale),
        rows=rows,
    )


def _scan_task(args):
    u, v_steps, lam = args
    return two_atom_min_scan(u, v_steps, lam=lam)


def _search_task(args):
    u, lam, atom_grid, restarts, seed = args
    return local_search_min(u, lam, atom_grid=atom_grid, restarts=restarts, seed=seed)


def parallel_map(fn, items, jobs: int):
    """Map preserving order; with jobs > 1 the items are distributed over a
    process pool, and the per-item results are merged by index so the output
    never depends on scheduling."""
    items = list(items)
    if jobs <= 1 or len(items) < 4:
        return [fn(it) for it in items]
    from concurrent.futures import ProcessPoolExecutor

    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
