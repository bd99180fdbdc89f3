"""Fairness and quality metrics for a clustering result."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import kmeans_cost, point_group_costs
from .errors import InvalidArgumentError, UnsupportedModeError


@dataclass(frozen=True, eq=False)
class MetricsReport:
    """``balance`` is None unless m = 2; ``price_of_fairness`` is None
    without a baseline or when the baseline cost is zero."""

    per_group_cost: np.ndarray
    max_cost_ratio: float
    overall_cost: float
    balance: float | None
    price_of_fairness: float | None
    wall_time: float | None = None

    def to_dict(self):
        ratio = self.max_cost_ratio
        return {
            "per_group_cost": self.per_group_cost.tolist(),
            "max_cost_ratio": "inf" if math.isinf(ratio) else ratio,
            "overall_cost": self.overall_cost,
            "balance": self.balance,
            "price_of_fairness": self.price_of_fairness,
        }


def per_group_cost(result, dataset):
    """Average cost of each group for the result's centers and assignment."""
    return point_group_costs(result.centers, dataset, result.assignment)


def cost_ratio(costs):
    """max_j f_j / min_j f_j; inf when some group has zero cost and another does not."""
    f = np.asarray(costs, dtype=np.float64)
    if f.size < 2:
        raise InvalidArgumentError("a cost ratio needs at least two groups")
    lo, hi = float(f.min()), float(f.max())
    if lo > 0:
        return hi / lo
    return math.inf if hi > 0 else 1.0


def max_cost_ratio(result, dataset):
    return cost_ratio(per_group_cost(result, dataset))


def balance(dataset, assignment):
    """min over non-empty clusters of min(|A cap U_i| / |B cap U_i|, its inverse)."""
    if dataset.m != 2:
        raise UnsupportedModeError(f"balance is defined for two groups, got m={dataset.m}")
    counts = np.zeros((assignment.k, 2), np.int64)
    np.add.at(counts, (assignment.cluster_of, dataset.group_of), 1)
    best = 1.0
    for a, b in counts:
        if a + b == 0:
            continue
        best = min(best, 0.0 if a == 0 or b == 0 else min(a / b, b / a))
    return float(best)


def overall_cost(result, dataset):
    """Delta(C, U) / n."""
    return kmeans_cost(result.centers, dataset, result.assignment) / dataset.n


def price_of_fairness(fair_result, baseline_result, dataset):
    """Relative increase of the mean k-means cost over the baseline; None if the baseline cost is 0."""
    if fair_result.assignment.k != baseline_result.assignment.k:
        raise InvalidArgumentError("results must use the same k")
    base = overall_cost(baseline_result, dataset)
    if base == 0:
        return None
    return (overall_cost(fair_result, dataset) - base) / base


def metrics_report(result, dataset, baseline=None, wall_time=None):
    costs = per_group_cost(result, dataset)
    return MetricsReport(
        per_group_cost=costs,
        max_cost_ratio=cost_ratio(costs) if dataset.m >= 2 else 1.0,
        overall_cost=overall_cost(result, dataset),
        balance=balance(dataset, result.assignment) if dataset.m == 2 else None,
        price_of_fairness=None if baseline is None else price_of_fairness(result, baseline, dataset),
        wall_time=wall_time,
    )
