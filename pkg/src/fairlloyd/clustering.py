"""Lloyd and Fair-Lloyd outer loops and their initializations.

Both loops alternate a nearest-center assignment with a center update. The
Lloyd objective is the mean squared distance Delta(C)/n; the Fair-Lloyd
objective is the largest per-group average cost. Ties in the assignment go
to the lowest cluster index, and empty clusters are refilled with the
point farthest from its current center, so runs are deterministic per seed.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import (Assignment, as_centers, compute_group_stats, kmeans_cost,
                   point_group_costs)
from .errors import InvalidArgumentError, UnsupportedModeError
from .fair_solver import FairSolveReport, SolverConfig, solve_fair_centers

INITS = ("random", "kmeanspp", "weighted_lloyd")


@dataclass(frozen=True)
class ClusteringConfig:
    """Outer-loop settings.

    ``tol`` is the relative objective improvement below which the loop
    stops; it also stops as soon as an assignment repeats.
    """

    k: int
    max_outer_iterations: int = 200
    restarts: int = 1
    seed: int = 0
    init: str = "random"
    tol: float = 1e-10
    threads: int = 1
    record_centers: bool = False

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidArgumentError("k must be a positive integer")
        if self.max_outer_iterations < 1:
            raise InvalidArgumentError("max_outer_iterations must be >= 1")
        if self.restarts < 1:
            raise InvalidArgumentError("restarts must be >= 1")
        if self.threads < 1:
            raise InvalidArgumentError("threads must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")
        if self.init not in INITS:
            raise UnsupportedModeError(f"init must be one of {INITS}, got {self.init!r}")
        if not self.tol >= 0:
            raise InvalidArgumentError("tol must be >= 0")


@dataclass(frozen=True, eq=False)
class ClusteringResult:
    centers: np.ndarray
    assignment: Assignment
    objective: float
    group_costs: np.ndarray
    objective_trace: tuple
    iterations_run: int
    converged: bool
    algorithm: str
    restart: int
    initial_centers: np.ndarray
    fair_report: FairSolveReport | None = None
    center_trace: tuple = ()
    wall_time: float = field(default=0.0, compare=False)


def _rng(seed, restart=0):
    return np.random.default_rng([int(seed), int(restart)])


def _check_k(dataset, k):
    if k > dataset.n:
        raise InvalidArgumentError(f"k={k} exceeds the number of points n={dataset.n}")


# ---------------------------------------------------------------- steps


def assign_points(dataset, centers):
    """Nearest center per point, lowest index on ties."""
    c = as_centers(centers, dataset.d)
    labels, _ = _kernels.nearest_center(dataset.points, c)
    return Assignment(labels, c.shape[0])


def fill_empty(dataset, assignment, centers):
    """Move points into empty clusters until none is empty.

    Each empty cluster (lowest index first) receives the point farthest from
    its assigned center among clusters with more than one point; that point
    becomes the empty cluster's center. Returns (assignment, centers).
    """
    c = np.array(as_centers(centers, dataset.d))
    k = assignment.k
    _check_k(dataset, k)
    labels = np.array(assignment.cluster_of)
    sizes = np.bincount(labels, minlength=k)
    if sizes.min() > 0:
        return assignment, c
    diff = dataset.points - c[labels]
    dist = np.einsum("pd,pd->p", diff, diff)
    for i in np.flatnonzero(sizes == 0):
        donor_ok = sizes[labels] > 1
        p = int(np.argmax(np.where(donor_ok, dist, -1.0)))
        sizes[labels[p]] -= 1
        sizes[i] += 1
        labels[p] = i
        c[i] = dataset.points[p]
        dist[p] = 0.0
    return Assignment(labels, k), c


def update_means(dataset, assignment, centers=None):
    """Cluster means. An empty cluster is re-seeded at the point with the
    largest assigned distance (to ``centers`` if given, else to the new
    means), lowest point index on ties."""
    k = assignment.k
    if assignment.cluster_of.shape[0] != dataset.n:
        raise InvalidArgumentError("assignment length does not match the dataset")
    zeros = np.zeros(dataset.n, np.int64)
    counts, means, _ = _kernels.cell_stats(dataset.points, assignment.cluster_of, zeros, k, 1)
    out = np.ascontiguousarray(means[:, 0, :])
    empty = np.flatnonzero(counts[:, 0] == 0)
    if empty.size:
        ref = out if centers is None else as_centers(centers, dataset.d)
        diff = dataset.points - ref[assignment.cluster_of]
        dist = np.einsum("pd,pd->p", diff, diff)
        for i in empty:
            p = int(np.argmax(dist))
            out[i] = dataset.points[p]
            dist[p] = -1.0
    return out


def mean_cost(centers, dataset, assignment):
    return kmeans_cost(centers, dataset, assignment) / dataset.n


def fair_cost(centers, dataset, assignment=None):
    """Phi(C, U): the largest per-group average cost, evaluated point by point."""
    if assignment is None:
        assignment = assign_points(dataset, centers)
    return float(point_group_costs(centers, dataset, assignment).max())


def weighted_objective(centers, dataset, assignment=None):
    """g(C, U) = sum_j Delta(C, U cap A_j) / |A_j|."""
    if assignment is None:
        assignment = assign_points(dataset, centers)
    return float(np.sum(point_group_costs(centers, dataset, assignment)))


# ---------------------------------------------------------------- inits


def init_random(dataset, k, seed=0, restart=0):
    """k distinct data points, uniformly without replacement."""
    _check_k(dataset, k)
    idx = _rng(seed, restart).choice(dataset.n, size=k, replace=False)
    return np.ascontiguousarray(dataset.points[idx])


def init_kmeanspp(dataset, k, seed=0, restart=0):
    """D^2 sampling; falls back to uniform once every distance is zero."""
    _check_k(dataset, k)
    rng = _rng(seed, restart)
    pts = dataset.points
    chosen = [int(rng.integers(dataset.n))]
    diff = pts - pts[chosen[0]]
    d2 = np.einsum("pd,pd->p", diff, diff)
    for _ in range(1, k):
        total = float(np.sum(d2))
        if total > 0:
            p = int(rng.choice(dataset.n, p=d2 / total))
        else:
            p = int(rng.integers(dataset.n))
        chosen.append(p)
        diff = pts - pts[p]
        d2 = np.minimum(d2, np.einsum("pd,pd->p", diff, diff))
    return np.ascontiguousarray(pts[chosen])


def _weighted_means(dataset, assignment):
    stats = compute_group_stats(dataset, assignment)
    w = stats.frac
    return np.einsum("km,kmd->kd", w / w.sum(axis=1, keepdims=True), stats.group_mean)


def init_weighted_lloyd(dataset, k, seed=0, restart=0, max_iterations=200, tol=1e-10):
    """Lloyd with point weights 1/|A_j|, i.e. minimizing g, from a D^2 seed."""
    centers = init_kmeanspp(dataset, k, seed, restart)
    prev, last = None, None
    for _ in range(max_iterations):
        a, centers = fill_empty(dataset, assign_points(dataset, centers), centers)
        if a.same_as(prev):
            break
        centers = _weighted_means(dataset, a)
        cost = weighted_objective(centers, dataset, a)
        if last is not None and last - cost <= tol * abs(last):
            break
        prev, last = a, cost
    return centers


_INIT_FUNCS = {"random": init_random, "kmeanspp": init_kmeanspp, "weighted_lloyd": init_weighted_lloyd}


# ---------------------------------------------------------------- loops


def _loop(dataset, centers, config, step, objective):
    trace, history = [], []
    prev, report = None, None
    converged = False
    it = 0
    for it in range(1, config.max_outer_iterations + 1):
        a, centers = fill_empty(dataset, assign_points(dataset, centers), centers)
        if a.same_as(prev):
            converged = True
            it -= 1
            break
        centers, report = step(a, centers)
        cost = objective(centers, a)
        if config.record_centers:
            history.append(centers.copy())
        stop = bool(trace) and trace[-1] - cost <= config.tol * abs(trace[-1])
        trace.append(cost)
        prev = a
        if stop:
            converged = True
            break
    final, centers = fill_empty(dataset, assign_points(dataset, centers), centers)
    return centers, final, tuple(trace), it, converged, report, tuple(history)


def _best_of(dataset, config, run):
    _check_k(dataset, config.k)
    init = _INIT_FUNCS[config.init]

    def one(r):
        return run(init(dataset, config.k, config.seed, r), r)

    t0 = time.perf_counter()

    if config.threads > 1 and config.restarts > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(one, range(config.restarts)))
    else:
        results = [one(r) for r in range(config.restarts)]
    best = min(range(len(results)), key=lambda r: (results[r].objective, r))
    return ClusteringResult(**{**results[best].__dict__, "wall_time": time.perf_counter() - t0})


def _lloyd_from(dataset, start, config, restart=0):
    def step(a, centers):
        return update_means(dataset, a, centers), None

    def objective(c, a):
        return mean_cost(c, dataset, a)

    centers, a, trace, it, conv, _, hist = _loop(dataset, as_centers(start, dataset.d), config,
                                                 step, objective)
    costs = point_group_costs(centers, dataset, a)
    return ClusteringResult(centers, a, mean_cost(centers, dataset, a), costs, trace, it, conv,
                            "lloyd", restart, np.asarray(start, dtype=np.float64), None, hist)


def _fair_from(dataset, start, config, solver_config, restart=0):
    def objective(c, a):
        return float(point_group_costs(c, dataset, a).max())

    def step(a, centers):
        rep = solve_fair_centers(compute_group_stats(dataset, a), solver_config)
        new = rep.centers
        if dataset.m > 1:
            # keep the incoming centers if the solver's answer is worse for this partition
            old, cur = objective(centers, a), objective(new, a)
            if old < cur - 1e-12 * abs(cur):
                new = centers
        return np.ascontiguousarray(new), rep

    centers, a, trace, it, conv, rep, hist = _loop(dataset, as_centers(start, dataset.d), config,
                                                   step, objective)
    costs = point_group_costs(centers, dataset, a)
    return ClusteringResult(centers, a, float(costs.max()), costs, trace, it, conv,
                            "fair_lloyd", restart, np.asarray(start, dtype=np.float64), rep, hist)


def lloyd(dataset, config, initial_centers=None):
    """Standard k-means with best-of-restarts on the mean squared distance.

    With ``initial_centers`` a single run starts there and ``config.init``
    and ``config.restarts`` are ignored.
    """
    if initial_centers is not None:
        c = as_centers(initial_centers, dataset.d)
        if c.shape[0] != config.k:
            raise InvalidArgumentError("initial_centers must have k rows")
        _check_k(dataset, config.k)
        return _lloyd_from(dataset, c, config)
    return _best_of(dataset, config, lambda s, r: _lloyd_from(dataset, s, config, r))


def fair_lloyd(dataset, config, solver_config=None, initial_centers=None):
    """Fair-Lloyd: nearest-center assignment, then the fair centers of that partition.

    The objective is Phi = max_j (cost of group j) / |A_j|. Best of restarts
    by final Phi.
    """
    solver_config = solver_config or SolverConfig()
    if initial_centers is not None:
        c = as_centers(initial_centers, dataset.d)
        if c.shape[0] != config.k:
            raise InvalidArgumentError("initial_centers must have k rows")
        _check_k(dataset, config.k)
        return _fair_from(dataset, c, config, solver_config)
    return _best_of(dataset, config,
                    lambda s, r: _fair_from(dataset, s, config, solver_config, r))
