"""Timing harness: numba vs numpy kernels and Lloyd vs Fair-Lloyd iterations."""
from __future__ import annotations

import time

import numpy as np

from . import _kernels
from .clustering import assign_points, fill_empty, init_random, update_means
from .core import Dataset, compute_group_stats
from .fair_solver import SolverConfig, line_search_2groups, solve_fair_centers


def _best_time(fn, repeat):
    fn()  # warm-up, includes any compilation
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def random_dataset(n, d, m=2, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=(n, d)), rng.integers(m, size=n) if n >= m else np.arange(n) % m)


def bench_kernels(n=10_000, d=10, k=10, m=2, repeat=5, seed=0):
    """Best-of-``repeat`` seconds per kernel and backend."""
    ds = random_dataset(n, d, m, seed)
    centers = init_random(ds, k, seed)
    labels, _ = _kernels.nearest_center(ds.points, centers)
    out = {}
    for backend in _kernels.available_backends():
        kern = _kernels.impl(backend)
        out[backend] = {
            "nearest_center": _best_time(lambda: kern.nearest_center(ds.points, centers), repeat),
            "cell_stats": _best_time(lambda: kern.cell_stats(ds.points, labels, ds.group_of, k, m), repeat),
        }
    return out


def _lloyd_step(ds, centers):
    a, c = fill_empty(ds, assign_points(ds, centers), centers)
    return update_means(ds, a, c)


def _fair_step(ds, centers, solver_config):
    a, c = fill_empty(ds, assign_points(ds, centers), centers)
    return solve_fair_centers(compute_group_stats(ds, a), solver_config).centers


def bench_iterations(dataset, k, repeat=5, seed=0, solver_config=None):
    """Seconds for one Lloyd and one Fair-Lloyd round from the same centers."""
    solver_config = solver_config or SolverConfig()
    centers = init_random(dataset, k, seed)
    t_lloyd = _best_time(lambda: _lloyd_step(dataset, centers), repeat)
    t_fair = _best_time(lambda: _fair_step(dataset, centers, solver_config), repeat)
    return {"lloyd": t_lloyd, "fair_lloyd": t_fair, "ratio": t_fair / t_lloyd}


def bench_line_search(sizes=(1_000, 100_000), d=10, k=10, repeat=20, seed=0):
    """Line-search seconds on stats from datasets of different n.

    Larger datasets tile the smallest one, so every size yields the same
    fractions and means and the search takes the same path; only n differs.
    """
    base = random_dataset(min(sizes), d, 2, seed)
    centers = init_random(base, k, seed)
    out = {}
    for n in sizes:
        reps = -(-n // base.n)
        ds = Dataset(np.tile(base.points, (reps, 1)), np.tile(base.group_of, reps))
        stats = compute_group_stats(ds, assign_points(ds, centers))
        out[ds.n] = _best_time(lambda: line_search_2groups(stats), repeat)
    return out


def run_benchmark(n=10_000, d=10, k=10, repeat=5, seed=0):
    ds = random_dataset(n, d, 2, seed)
    report = {"n": n, "d": d, "k": k, "kernels": bench_kernels(n, d, k, 2, repeat, seed), "iterations": {}}
    for backend in _kernels.available_backends():
        with _kernels.use_backend(backend):
            report["iterations"][backend] = bench_iterations(ds, k, repeat, seed)
    report["line_search"] = {str(s): t for s, t in bench_line_search(d=d, k=k, seed=seed).items()}
    return report
