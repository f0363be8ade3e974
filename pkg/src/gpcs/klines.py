"""K-lines clustering: Lloyd-style alternation between nearest-line assignment
(perpendicular distance) and major-axis recentering, with random restarts,
plus scree values and AIC for choosing K.

Restarts are run as one vectorized batch. Each restart draws its initial
partition from its own child stream of the config seed, so results do not
depend on how restarts are grouped.
"""
import enum
import math
from dataclasses import dataclass, field, replace
from typing import List

import numpy as np

from .core import Line, as_xy, principal_angle
from .errors import DegenerateCluster, InsufficientData, InvalidArguments, NoFeasibleK, \
    SingularCovariance

AIC_RIDGE = 1e-10


class EmptyClusterPolicy(enum.Enum):
    RESEED_FARTHEST = "reseed_farthest"
    DROP = "drop"


class InitMethod(enum.Enum):
    # partition induced by K seed lines, each the major axis of a random point's neighbourhood
    NEIGHBORHOOD = "neighborhood"
    # partition induced by K lines through random point pairs
    PAIRS = "pairs"
    # uniformly random partition into K nonempty groups
    PARTITION = "partition"
    # restarts cycle through the three schemes above
    MIXED = "mixed"


_CYCLE = (InitMethod.NEIGHBORHOOD, InitMethod.PAIRS, InitMethod.PARTITION)


@dataclass(frozen=True)
class KlinesConfig:
    restarts: int = 30
    max_iterations: int = 100
    seed: int = 0
    empty_cluster_policy: EmptyClusterPolicy = EmptyClusterPolicy.RESEED_FARTHEST
    init: InitMethod = InitMethod.MIXED

    def __post_init__(self):
        if self.restarts < 1 or self.max_iterations < 1:
            raise InvalidArguments("restarts and max_iterations must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidArguments("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "empty_cluster_policy",
                           EmptyClusterPolicy(self.empty_cluster_policy))
        object.__setattr__(self, "init", InitMethod(self.init))

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass
class FitResult:
    """Best K-lines solution. `labels` are 1-based and index `lines`."""

    lines: List[Line]
    labels: np.ndarray
    objective: float
    iterations: int
    restarts_run: int
    converged: bool
    trajectory: List[float] = field(default_factory=list)
    restart_objectives: List[float] = field(default_factory=list)
    converged_restarts: int = 0

    @property
    def k(self):
        return len(self.lines)


@dataclass
class RestartRun:
    lines: List[Line]
    labels: np.ndarray
    objective: float
    iterations: int
    converged: bool
    trajectory: List[float]


def _line_arrays(lines):
    coef = np.array([ln.as_tuple() for ln in lines], dtype=float).reshape(-1, 3)
    return coef[:, 0], coef[:, 1], coef[:, 2]


def _sq_dist(x, y, lines):
    a, b, c = _line_arrays(lines)
    return (a[:, None] * x + b[:, None] * y + c[:, None]) ** 2


def objective_w(points, lines):
    """Mean over points of the squared perpendicular distance to the closest line."""
    x, y = as_xy(points)
    if len(lines) == 0:
        raise InvalidArguments("need at least one line")
    return float(np.mean(np.min(_sq_dist(x, y, lines), axis=0)))


def assign(points, lines):
    """1-based index of the closest line for every point; ties go to the lowest index."""
    x, y = as_xy(points)
    if len(lines) == 0:
        raise InvalidArguments("need at least one line")
    return np.argmin(_sq_dist(x, y, lines), axis=0) + 1


def recenter(points, labels, k, policy=EmptyClusterPolicy.RESEED_FARTHEST):
    """Major-axis line of each labelled cluster.

    Under RESEED_FARTHEST an empty cluster gets the line through the point
    farthest from its own cluster line and that point's nearest neighbour, and
    a cluster of identical points gets the horizontal line through them. Under
    DROP empty clusters are omitted and identical-point clusters raise
    DegenerateCluster.
    """
    policy = EmptyClusterPolicy(policy)
    x, y = as_xy(points)
    lab = np.asarray(labels, dtype=np.int64) - 1
    if lab.shape != x.shape or lab.min(initial=0) < 0 or lab.max(initial=0) >= k:
        raise InvalidArguments("labels must be 1..k and align with points")
    a, b, c, counts, sxx, syy = _recenter_batch(x, y, lab[None, :], k)
    a, b, c, counts = a[0], b[0], c[0], counts[0]
    degenerate = (counts > 0) & (sxx[0] == 0) & (syy[0] == 0)
    if policy is EmptyClusterPolicy.DROP and np.any(degenerate):
        raise DegenerateCluster("a cluster consists of identical points")
    lines = [Line(a[j], b[j], c[j]) if counts[j] > 0 else None for j in range(k)]
    if policy is EmptyClusterPolicy.DROP:
        return [ln for ln in lines if ln is not None]
    empty = [j for j in range(k) if counts[j] == 0]
    if empty:
        resid = np.zeros_like(x)
        for j, ln in enumerate(lines):
            if ln is not None:
                m = lab == j
                resid[m] = (ln.a * x[m] + ln.b * y[m] + ln.c) ** 2
        order = np.argsort(-resid, kind="stable")
        for rank, j in enumerate(empty):
            i = order[rank % x.size]
            d = (x - x[i]) ** 2 + (y - y[i]) ** 2
            d[i] = np.inf
            nb = int(np.argmin(d)) if x.size > 1 else i
            if nb != i and d[nb] > 0:
                lines[j] = Line.through((x[i], y[i]), (x[nb] - x[i], y[nb] - y[i]))
            else:
                lines[j] = Line(0.0, 1.0, -y[i])
    return lines


def _recenter_batch(x, y, labels, k):
    """Major-axis coefficients for every (restart, cluster) pair.

    labels: (r, n) 0-based. Returns a, b, c, counts of shape (r, k) plus the
    centred sums of squares. Empty clusters get NaN coefficients.
    """
    r, n = labels.shape
    g = (labels + k * np.arange(r)[:, None]).ravel()
    xs = np.broadcast_to(x, (r, n)).ravel()
    ys = np.broadcast_to(y, (r, n)).ravel()
    size = r * k
    counts = np.bincount(g, minlength=size).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        mx = np.bincount(g, weights=xs, minlength=size) / counts
        my = np.bincount(g, weights=ys, minlength=size) / counts
    dx = xs - mx[g]
    dy = ys - my[g]
    sxx = np.bincount(g, weights=dx * dx, minlength=size)
    syy = np.bincount(g, weights=dy * dy, minlength=size)
    sxy = np.bincount(g, weights=dx * dy, minlength=size)
    theta = principal_angle(sxx, syy, sxy)
    a = np.sin(theta)
    b = -np.cos(theta)
    c = -(a * mx + b * my)
    shape = (r, k)
    return (a.reshape(shape), b.reshape(shape), c.reshape(shape), counts.reshape(shape),
            sxx.reshape(shape), syy.reshape(shape))


def _reseed_empty(x, y, labels, d2min, k):
    """Fill empty clusters of one restart in place (labels 0-based)."""
    for _ in range(k):
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return
        j = empty[0]
        donors = counts[labels] >= 2
        if not np.any(donors):
            return
        cand = np.where(donors, d2min, -np.inf)
        i = int(np.argmax(cand))
        labels[i] = j
        counts = np.bincount(labels, minlength=k)
        ok = counts[labels] >= 2
        ok[i] = False
        if np.any(ok):
            d = np.where(ok, (x - x[i]) ** 2 + (y - y[i]) ** 2, np.inf)
            labels[int(np.argmin(d))] = j
        d2min[i] = 0.0


def _seed_labels(x, y, k, rng, method):
    n = x.size
    if method is InitMethod.PARTITION:
        lab = rng.integers(k, size=n)
        lab[rng.permutation(n)[:k]] = np.arange(k)
        return lab
    a, b, c = np.empty(k), np.empty(k), np.empty(k)
    m = max(3, n // (3 * k))
    for j in range(k):
        if method is InitMethod.PAIRS:
            nb = rng.choice(n, size=2, replace=False) if n > 1 else np.array([0])
        else:
            i = rng.integers(n)
            nb = np.argsort((x - x[i]) ** 2 + (y - y[i]) ** 2, kind="stable")[:m]
        xs, ys = x[nb], y[nb]
        mx, my = xs.mean(), ys.mean()
        dx, dy = xs - mx, ys - my
        theta = principal_angle(dx @ dx, dy @ dy, dx @ dy)
        a[j], b[j] = np.sin(theta), -np.cos(theta)
        c[j] = -(a[j] * mx + b[j] * my)
    d2 = (a[:, None] * x + b[:, None] * y + c[:, None]) ** 2
    lab = np.argmin(d2, axis=0)
    if np.bincount(lab, minlength=k).min() == 0:
        _reseed_empty(x, y, lab, d2.min(axis=0), k)
    return lab


def _initial_partitions(x, y, k, config):
    streams = np.random.SeedSequence(int(config.seed)).spawn(config.restarts)
    init = np.empty((config.restarts, x.size), dtype=np.int64)
    for r, ss in enumerate(streams):
        rng = np.random.Generator(np.random.PCG64(ss))
        method = _CYCLE[r % len(_CYCLE)] if config.init is InitMethod.MIXED else config.init
        init[r] = _seed_labels(x, y, k, rng, method)
    return init


def run_restarts(points, k, config=KlinesConfig()):
    """Run every restart and return one RestartRun per restart, in restart order."""
    x, y = as_xy(points)
    n = x.size
    k = int(k)
    if k < 1:
        raise InvalidArguments("K must be >= 1")
    if n < k:
        raise InsufficientData(f"n = {n} points cannot form K = {k} clusters")
    R = config.restarts
    drop = config.empty_cluster_policy is EmptyClusterPolicy.DROP
    labels = _initial_partitions(x, y, k, config)
    coef = np.full((3, R, k), np.nan)
    alive = np.ones((R, k), dtype=bool)
    active = np.ones(R, dtype=bool)
    converged = np.zeros(R, dtype=bool)
    iterations = np.zeros(R, dtype=np.int64)
    trajectories = [[] for _ in range(R)]

    for _ in range(config.max_iterations):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        a, b, c, counts, _, _ = _recenter_batch(x, y, labels[idx], k)
        if drop:
            alive[idx] &= counts > 0
        else:
            alive[idx] = counts > 0
        coef[0, idx], coef[1, idx], coef[2, idx] = a, b, c
        d2 = (a[:, :, None] * x + b[:, :, None] * y + c[:, :, None]) ** 2
        d2 = np.where(alive[idx][:, :, None], d2, np.inf)
        new = np.argmin(d2, axis=1)
        d2min = np.min(d2, axis=1)
        w = d2min.mean(axis=1)
        for row, r in enumerate(idx):
            trajectories[r].append(float(w[row]))
        if not drop:
            for row in range(idx.size):
                if np.bincount(new[row], minlength=k).min() == 0:
                    _reseed_empty(x, y, new[row], d2min[row].copy(), k)
        changed = np.any(new != labels[idx], axis=1)
        labels[idx] = new
        iterations[idx] += 1
        done = idx[~changed]
        converged[done] = True
        active[done] = False

    runs = []
    for r in range(R):
        keep = np.flatnonzero(alive[r])
        lines = [Line(coef[0, r, j], coef[1, r, j], coef[2, r, j]) for j in keep]
        d2 = _sq_dist(x, y, lines)
        lab = np.argmin(d2, axis=0) + 1
        runs.append(RestartRun(lines=lines, labels=lab, objective=float(np.mean(d2.min(axis=0))),
                               iterations=int(iterations[r]), converged=bool(converged[r]),
                               trajectory=trajectories[r]))
    return runs


def klines_fit(points, k, config=KlinesConfig()):
    """Best-of-restarts K-lines fit (lowest objective, ties to the lowest restart index)."""
    runs = run_restarts(points, k, config)
    objs = [run.objective for run in runs]
    best = runs[int(np.argmin(objs))]
    return FitResult(lines=best.lines, labels=best.labels, objective=best.objective,
                     iterations=best.iterations, restarts_run=len(runs),
                     converged=best.converged, trajectory=best.trajectory,
                     restart_objectives=objs,
                     converged_restarts=sum(run.converged for run in runs))


def scree(points, k_max, config=KlinesConfig()):
    """[(K, W)] for K = 1..k_max, reported as fitted (not forced monotone)."""
    x, y = as_xy(points)
    if k_max < 1 or k_max > x.size:
        raise InvalidArguments("k_max must lie in 1..n")
    return [(k, klines_fit((x, y), k, config).objective) for k in range(1, k_max + 1)]


def _gaussian_mixture_terms(x, y, labels, k):
    n = x.size
    terms = []
    for j in range(1, k + 1):
        m = labels == j
        nk = int(m.sum())
        if nk < 3:
            raise SingularCovariance(f"cluster {j} has {nk} < 3 points")
        xk, yk = x[m], y[m]
        mx, my = xk.mean(), yk.mean()
        dx, dy = xk - mx, yk - my
        sxx, syy, sxy = np.mean(dx * dx), np.mean(dy * dy), np.mean(dx * dy)
        ridge = AIC_RIDGE * (sxx + syy) / 2
        sxx, syy = sxx + ridge, syy + ridge
        det = sxx * syy - sxy * sxy
        if not det > 0:
            raise SingularCovariance(f"cluster {j} covariance is singular")
        ex, ey = x - mx, y - my
        quad = (syy * ex * ex - 2 * sxy * ex * ey + sxx * ey * ey) / det
        logdens = math.log(nk / n) - math.log(2 * math.pi) - 0.5 * math.log(det) - 0.5 * quad
        terms.append(logdens)
    return np.vstack(terms)


def aic(points, fit):
    """2(6K - 1) - 2 * log-likelihood of the Gaussian mixture with per-cluster plug-ins.

    Clusters need at least 3 points and a positive-definite (lightly ridged)
    covariance, otherwise SingularCovariance is raised.
    """
    x, y = as_xy(points)
    labels = np.asarray(fit.labels)
    k = fit.k if hasattr(fit, "k") else int(labels.max())
    logs = _gaussian_mixture_terms(x, y, labels, k)
    top = logs.max(axis=0)
    loglik = np.sum(top + np.log(np.sum(np.exp(logs - top), axis=0)))
    return 2 * (6 * k - 1) - 2 * float(loglik)


def aic_curve(points, k_max, config=KlinesConfig()):
    """[(K, AIC or None)] for K = 1..k_max; None marks infeasible K."""
    x, y = as_xy(points)
    out = []
    for k in range(1, k_max + 1):
        if k > x.size:
            out.append((k, None))
            continue
        fit = klines_fit((x, y), k, config)
        try:
            out.append((k, aic((x, y), fit)))
        except SingularCovariance:
            out.append((k, None))
    return out


def select_k_aic(points, k_max, config=KlinesConfig()):
    """K in 1..k_max minimizing AIC; infeasible K are skipped, ties go to the smaller K."""
    if k_max < 1:
        raise InvalidArguments("k_max must be >= 1")
    curve = [(k, v) for k, v in aic_curve(points, k_max, config) if v is not None]
    if not curve:
        raise NoFeasibleK(f"no K in 1..{k_max} admits an AIC fit")
    best_k, best_v = curve[0]
    for k, v in curve[1:]:
        if v < best_v:
            best_k, best_v = k, v
    return best_k
