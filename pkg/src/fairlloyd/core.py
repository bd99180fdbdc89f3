"""Domain types and the cost functions every other module builds on.

Costs follow the fair k-means convention: a group's cost is the *average*
squared distance of its members to their cluster centers. The raw sum
over points is available through :func:`kmeans_cost`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidArgumentError


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """n points in d dimensions, each carrying a dense group id in [0, m).

    Use :meth:`from_labels` to build one from arbitrary group labels; the
    label -> id map follows sorted label order.
    """

    points: np.ndarray
    group_of: np.ndarray
    group_labels: tuple = ()
    feature_names: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidArgumentError(f"points must be a non-empty n x d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("points contain non-finite values")
        grp = np.asarray(self.group_of)
        if grp.shape != (pts.shape[0],):
            raise InvalidArgumentError("group_of must have one entry per point")
        if not np.issubdtype(grp.dtype, np.integer):
            raise InvalidArgumentError("group_of must hold integer ids; use Dataset.from_labels for raw labels")
        grp = grp.astype(np.int64)
        m = len(self.group_labels) if self.group_labels else int(grp.max()) + 1
        if grp.min() < 0 or grp.max() >= m:
            raise InvalidArgumentError(f"group ids must lie in [0, {m})")
        sizes = np.bincount(grp, minlength=m)
        if np.any(sizes == 0):
            missing = np.flatnonzero(sizes == 0).tolist()
            raise InvalidArgumentError(f"groups {missing} have no members")
        labels = tuple(str(x) for x in self.group_labels) or tuple(str(j) for j in range(m))
        names = tuple(self.feature_names) or tuple(f"x{q}" for q in range(pts.shape[1]))
        if len(names) != pts.shape[1]:
            raise InvalidArgumentError("feature_names length does not match d")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "group_of", _frozen(grp))
        object.__setattr__(self, "group_labels", labels)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "_sizes", _frozen(sizes))

    @classmethod
    def from_labels(cls, points, labels, feature_names=(), meta=None):
        labels = np.asarray(labels)
        uniq = sorted({str(x) for x in labels.tolist()})
        index = {lab: j for j, lab in enumerate(uniq)}
        ids = np.array([index[str(x)] for x in labels.tolist()], dtype=np.int64)
        return cls(points, ids, tuple(uniq), tuple(feature_names), dict(meta or {}))

    def with_points(self, points, feature_names=()):
        return Dataset(points, self.group_of, self.group_labels, tuple(feature_names), dict(self.meta))

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    @property
    def m(self):
        return len(self.group_labels)

    @property
    def group_sizes(self):
        return self._sizes


@dataclass(frozen=True, eq=False)
class Assignment:
    """Cluster index per point. Empty clusters are allowed."""

    cluster_of: np.ndarray
    k: int

    def __post_init__(self):
        lab = np.asarray(self.cluster_of)
        if lab.ndim != 1 or not np.issubdtype(lab.dtype, np.integer):
            raise InvalidArgumentError("cluster_of must be a 1-D integer array")
        if self.k < 1:
            raise InvalidArgumentError("k must be >= 1")
        if lab.size and (lab.min() < 0 or lab.max() >= self.k):
            raise InvalidArgumentError(f"cluster indices must lie in [0, {self.k})")
        object.__setattr__(self, "cluster_of", _frozen(lab.astype(np.int64)))

    @property
    def sizes(self):
        return np.bincount(self.cluster_of, minlength=self.k)

    def same_as(self, other):
        return other is not None and self.k == other.k and np.array_equal(self.cluster_of, other.cluster_of)


def as_centers(centers, d=None):
    """Validate a k x d center matrix (the CenterSet type is a plain array)."""
    c = np.asarray(centers, dtype=np.float64)
    if c.ndim == 1 and d == 1:
        c = c[:, None]
    if c.ndim != 2 or c.shape[0] < 1:
        raise InvalidArgumentError(f"centers must be a k x d matrix, got shape {c.shape}")
    if d is not None and c.shape[1] != d:
        raise InvalidArgumentError(f"centers have dimension {c.shape[1]}, expected {d}")
    if not np.all(np.isfinite(c)):
        raise InvalidArgumentError("centers contain non-finite values")
    return np.ascontiguousarray(c)


@dataclass(frozen=True, eq=False)
class GroupClusterStats:
    """Sufficient statistics of a partition for the fair-center problem.

    ``frac[i, j]`` is the share of group j that falls in cluster i,
    ``group_mean[i, j]`` the mean of those points (zeros where absent),
    ``base_cost[j]`` group j's average cost with every cluster center at
    that group's own cluster mean.
    """

    counts: np.ndarray
    frac: np.ndarray
    group_mean: np.ndarray
    base_cost: np.ndarray
    group_sizes: np.ndarray

    def __post_init__(self):
        for name in ("counts", "frac", "group_mean", "base_cost", "group_sizes"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        k, m = self.frac.shape
        if self.group_mean.shape[:2] != (k, m) or self.base_cost.shape != (m,):
            raise InvalidArgumentError("inconsistent GroupClusterStats shapes")

    @property
    def k(self):
        return self.frac.shape[0]

    @property
    def m(self):
        return self.frac.shape[1]

    @property
    def d(self):
        return self.group_mean.shape[2]

    @property
    def present(self):
        return self.frac > 0

    def gap_lengths(self):
        """l_i = |mu_i^A - mu_i^B| for m = 2; zero where either group is absent."""
        if self.m != 2:
            raise InvalidArgumentError("gap lengths are defined for two groups")
        both = self.present.all(axis=1)
        diff = self.group_mean[:, 0] - self.group_mean[:, 1]
        return np.where(both, np.sqrt(np.einsum("kd,kd->k", diff, diff)), 0.0)

    @classmethod
    def from_arrays(cls, frac, group_mean, base_cost, group_sizes=None):
        """Build stats directly from fractions and means, e.g. for a worked instance."""
        frac = np.asarray(frac, dtype=np.float64)
        mu = np.asarray(group_mean, dtype=np.float64)
        if mu.ndim == 2:
            mu = mu[:, :, None]
        sizes = np.ones(frac.shape[1]) if group_sizes is None else np.asarray(group_sizes, dtype=np.float64)
        mu = np.where((frac > 0)[:, :, None], mu, 0.0)
        return cls(frac * sizes, frac, mu, np.asarray(base_cost, dtype=np.float64), sizes)


def _check_pair(centers, dataset, assignment):
    c = as_centers(centers, dataset.d)
    if assignment.cluster_of.shape[0] != dataset.n:
        raise InvalidArgumentError("assignment length does not match the dataset")
    if c.shape[0] != assignment.k:
        raise InvalidArgumentError(f"{c.shape[0]} centers for an assignment with k={assignment.k}")
    return c


def kmeans_cost(centers, dataset, assignment, subset=None):
    """Sum of squared distances of points (optionally one group) to their centers."""
    c = _check_pair(centers, dataset, assignment)
    if subset is not None and not 0 <= subset < dataset.m:
        raise InvalidArgumentError(f"group {subset} outside [0, {dataset.m})")
    return _kernels.assigned_cost(dataset.points, c, assignment.cluster_of, dataset.group_of,
                                  -1 if subset is None else int(subset))


def point_group_costs(centers, dataset, assignment):
    """Average cost of every group evaluated point by point."""
    return np.array([kmeans_cost(centers, dataset, assignment, j) / dataset.group_sizes[j]
                     for j in range(dataset.m)])


def compute_group_stats(dataset, assignment):
    if assignment.cluster_of.shape[0] != dataset.n:
        raise InvalidArgumentError("assignment length does not match the dataset")
    k, m = assignment.k, dataset.m
    counts, means, scatter = _kernels.cell_stats(dataset.points, assignment.cluster_of,
                                                 dataset.group_of, k, m)
    sizes = dataset.group_sizes.astype(np.float64)
    frac = counts / sizes
    base = np.array([math.fsum(scatter[:, j]) for j in range(m)]) / sizes
    return GroupClusterStats(counts, frac, means, base, sizes)


def group_costs(centers, stats):
    """f_j(C) for every group j."""
    c = as_centers(centers, stats.d)
    if c.shape[0] != stats.k:
        raise InvalidArgumentError(f"{c.shape[0]} centers for stats with k={stats.k}")
    return _kernels.group_costs(c, stats.frac, stats.group_mean, stats.base_cost)


def group_cost(centers, stats, j):
    if not 0 <= j < stats.m:
        raise InvalidArgumentError(f"group {j} outside [0, {stats.m})")
    return float(group_costs(centers, stats)[j])


def group_cost_gradient(centers, stats, j):
    """Gradient of f_j with respect to all k x d center coordinates."""
    c = as_centers(centers, stats.d)
    return 2.0 * stats.frac[:, j, None] * (c - stats.group_mean[:, j, :])


def fair_objective(centers, stats):
    return float(group_costs(centers, stats).max())
