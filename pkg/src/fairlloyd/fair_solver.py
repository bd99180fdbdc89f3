"""Fair centers for a fixed partition.

For a partition with group/cluster statistics, the fair centers minimize
F(C) = max_j f_j(C). Every minimizer is a point of

    Z = { C : c_i = sum_j gamma_j a_ij mu_ij / sum_j gamma_j a_ij,  gamma in simplex },

so the solvers below search over gamma:

* ``line_search_2groups``: bisection on gamma for two groups, where
  f_A decreases and f_B increases along the curve.
* ``solve_mwu``: multiplicative-weights heuristic for m groups with a
  min/max certificate (min_j f_j over any stationary point of Z_S is a
  lower bound on the optimum).
* ``solve_subgradient``: reference oracle. Projected subgradient descent on
  per-cluster simplex weights, paired with projected supergradient ascent
  on the concave dual q(gamma) = min_C sum_j gamma_j f_j(C).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import nnls

from . import _kernels
from .core import GroupClusterStats, as_centers, group_costs
from .errors import (DegenerateClusterError, InvalidArgumentError,
                     InvalidCertificateError, UnsupportedModeError)

MODES = ("auto", "line_search", "mwu", "subgradient")

# (max_iterations, tol) per solver
_DEFAULTS = {
    "line_search": (64, 1e-12),
    "mwu": (5000, 0.0),
    "subgradient": (20000, 1e-12),
}


@dataclass(frozen=True)
class SolverConfig:
    """Loop bounds for the fair-center solvers.

    ``max_iterations`` and ``tol`` default per solver when left as None.
    ``polish_tol`` applies to ``mode="auto"`` with more than two groups: the
    MWU answer is refined by the oracle when its certificate gap exceeds
    ``polish_tol * objective``.
    """

    mode: str = "auto"
    max_iterations: int | None = None
    tol: float | None = None
    polish_tol: float = 0.01

    def __post_init__(self):
        if self.mode not in MODES:
            raise UnsupportedModeError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be >= 1")
        if self.tol is not None and not self.tol > 0:
            raise InvalidArgumentError("tol must be > 0")

    def resolve(self, solver):
        T, tol = _DEFAULTS[solver]
        return (self.max_iterations or T, tol if self.tol is None else self.tol)


@dataclass(frozen=True, eq=False)
class FairSolveReport:
    centers: np.ndarray
    gamma: np.ndarray
    group_costs: np.ndarray
    objective: float
    lower_bound: float
    certificate_gap: float
    iterations: int
    method: str

    def to_dict(self):
        return {
            "method": self.method,
            "gamma": self.gamma.tolist(),
            "group_costs": self.group_costs.tolist(),
            "objective": self.objective,
            "lower_bound": self.lower_bound,
            "certificate_gap": self.certificate_gap,
            "iterations": self.iterations,
            "centers": self.centers.tolist(),
        }


@dataclass(frozen=True, eq=False)
class GammaCurvePoint:
    gamma: np.ndarray
    centers: np.ndarray
    x: np.ndarray | None = None


def _as_gamma(gamma, m):
    g = np.atleast_1d(np.asarray(gamma, dtype=np.float64))
    if g.shape == (1,) and m == 2:
        g = np.array([g[0], 1.0 - g[0]])
    if g.shape != (m,):
        raise InvalidArgumentError(f"gamma must have {m} entries")
    if np.any(g < -1e-12) or abs(g.sum() - 1.0) > 1e-12:
        raise InvalidArgumentError("gamma must lie on the probability simplex")
    return np.clip(g, 0.0, None)


def _require_two(stats):
    if stats.m != 2:
        raise UnsupportedModeError(f"this operation needs exactly 2 groups, got m={stats.m}")


def x_from_gamma(gamma, stats):
    """Position x_i in [0, l_i] along each segment mu_i^A -> mu_i^B.

    Clusters missing a group, or with coincident means, are pinned at 0.
    """
    _require_two(stats)
    g = float(gamma)
    if not 0.0 <= g <= 1.0:
        raise InvalidArgumentError("gamma must lie in [0, 1]")
    a, b = stats.frac[:, 0], stats.frac[:, 1]
    l = stats.gap_lengths()
    den = g * a + (1.0 - g) * b
    live = (l > 0) & (den > 0)
    x = np.zeros(stats.k)
    x[live] = (1.0 - g) * b[live] * l[live] / den[live]
    return np.minimum(x, l)


def centers_from_gamma(gamma, stats, fallback=False):
    """Member of Z for the simplex weights ``gamma``.

    A cluster whose present groups all carry zero weight has no defined
    center; this raises :class:`DegenerateClusterError` unless ``fallback``
    is set, in which case it gets the frac-weighted mean of its present
    group means (any point is stationary there).
    """
    g = _as_gamma(gamma, stats.m)
    centers, degenerate = _kernels.centers_from_gamma(g, stats.frac, stats.group_mean)
    if not fallback:
        bad = np.flatnonzero(degenerate & stats.present.any(axis=1))
        if bad.size:
            raise DegenerateClusterError(bad)
    return centers


def gamma_curve_point(gamma, stats):
    g = _as_gamma(gamma, stats.m)
    x = x_from_gamma(g[0], stats) if stats.m == 2 else None
    return GammaCurvePoint(g, centers_from_gamma(g, stats, fallback=True), x)


def stationarity_residual(gamma, centers, stats, subset=None):
    """Norm of sum_j gamma_j grad f_j(C) over all k x d center coordinates.

    With ``subset``, gamma is restricted to those groups and renormalized.
    """
    g = np.atleast_1d(np.asarray(gamma, dtype=np.float64))
    if g.shape == (1,) and stats.m == 2:
        g = np.array([g[0], 1.0 - g[0]])
    if subset is not None:
        keep = np.zeros(stats.m, bool)
        keep[list(subset)] = True
        g = np.where(keep, g, 0.0)
        if g.sum() <= 0:
            raise InvalidArgumentError("gamma has no mass on the subset")
        g = g / g.sum()
    c = as_centers(centers, stats.d)
    w = stats.frac * g[None, :]
    # sum_j 2 gamma_j a_ij (c_i - mu_ij)
    total = 2.0 * (w.sum(axis=1)[:, None] * c - np.einsum("km,kmd->kd", w, stats.group_mean))
    return float(np.linalg.norm(total))


def _support_bound(gamma, costs):
    """min_{j in supp(gamma)} f_j, valid for centers built from gamma."""
    return float(costs[gamma > 0].min())


def _report(stats, centers, gamma, lower, iterations, method):
    costs = group_costs(centers, stats)
    obj = float(costs.max())
    lower = min(float(lower), obj)
    return FairSolveReport(centers, np.asarray(gamma, dtype=np.float64), costs, obj,
                           lower, obj - lower, int(iterations), method)


def line_search_2groups(stats, config=None):
    """Bisection on gamma in [0, 1] equalizing f_A and f_B.

    Each step costs O(k) once the statistics exist. If one group dominates
    over the whole curve the search ends at the boundary: gamma = 1 puts
    every center on the group-A means, gamma = 0 on the group-B means.
    """
    _require_two(stats)
    T, tol = (config or SolverConfig()).resolve("line_search")
    a, b = stats.frac[:, 0], stats.frac[:, 1]
    base_a, base_b = stats.base_cost
    l = stats.gap_lengths()

    def costs_at(g):
        x = x_from_gamma(g, stats)
        return base_a + float(np.dot(a, x * x)), base_b + float(np.dot(b, (l - x) ** 2))

    it = 0
    fa, fb = costs_at(1.0)
    if fa >= fb:
        gamma = 1.0
    else:
        fa, fb = costs_at(0.0)
        if fb >= fa:
            gamma = 0.0
        else:
            gamma = 0.5
            best = (math.inf, gamma)
            for t in range(1, T + 1):
                it = t
                fa, fb = costs_at(gamma)
                best = min(best, (max(fa, fb), gamma))
                if abs(fa - fb) <= tol * max(fa, fb, 1.0):
                    break
                gamma = gamma + 0.5 ** (t + 1) if fa > fb else gamma - 0.5 ** (t + 1)
            else:
                fa, fb = costs_at(gamma)
                best = min(best, (max(fa, fb), gamma))
            gamma = best[1]
    g = np.array([gamma, 1.0 - gamma])
    centers = centers_from_gamma(g, stats, fallback=True)
    costs = group_costs(centers, stats)
    return _report(stats, centers, g, _support_bound(g, costs), it, "line_search")


def _active_set_bound(gamma, stats):
    """Best bound over Z_S for nested supports S = {j : gamma_j > 10^-p}."""
    best = -math.inf
    for p in range(1, 17):
        keep = gamma > 10.0 ** -p
        if not keep.any():
            continue
        g = np.where(keep, gamma, 0.0)
        g = g / g.sum()
        c = centers_from_gamma(g, stats, fallback=True)
        best = max(best, _support_bound(g, group_costs(c, stats)))
    return best


def solve_mwu(stats, config=None):
    """Multiplicative-weights search over gamma.

    Starts from uniform weights and shrinks gamma_j by the factor
    1 - d_j / (sqrt(t + 1) max_j d_j), d_j = F(C) - f_j(C). Returns the best
    iterate seen. The lower bound is the best min_j f_j over the iterates
    and over active-set restrictions of the returned weights.
    """
    if stats.m < 2:
        raise UnsupportedModeError("MWU needs at least two groups")
    T, _ = (config or SolverConfig()).resolve("mwu")
    gamma, _, lower, it = _kernels.mwu(stats.frac, stats.group_mean, stats.base_cost, T)
    centers = centers_from_gamma(gamma, stats, fallback=True)
    lower = max(lower, _active_set_bound(gamma, stats))
    return _report(stats, centers, gamma, lower, it, "mwu")


def solve_subgradient(stats, config=None):
    """Reference solver for min_C max_j f_j(C) over the convex hulls of group means.

    Two independent routes, best primal point returned:

    * primal: c_i = sum_j w_ij mu_ij with w_i on the simplex of present
      groups; step against the gradient of the lowest-index maximal f_j,
      step length scale / sqrt(t), then project each w_i;
    * dual: projected supergradient ascent (backtracking) on
      q(gamma) = min_C sum_j gamma_j f_j(C), whose supergradient is the vector
      of group costs at C(gamma). Every q(gamma) is a lower bound.

    ``lower_bound`` is the best dual value, so ``certificate_gap`` is a
    duality gap.
    """
    config = config or SolverConfig()
    T, tol = config.resolve("subgradient")
    frac, mu, base = stats.frac, stats.group_mean, stats.base_cost
    present = np.ascontiguousarray(stats.present)
    g_primal, _, g_dual, q_best, it_dual = _kernels.dual_ascent(frac, mu, base, T, tol)
    c_dual = _fix_degenerate(stats, g_primal, centers_from_gamma(g_primal, stats, fallback=True), config)
    f_dual = float(group_costs(c_dual, stats).max())

    rows = present.sum(axis=1, keepdims=True)
    w0 = np.where(present, 1.0 / np.maximum(rows, 1), 0.0)
    # the primal runs stop once they reach the dual bound
    target = q_best + tol * max(1.0, abs(q_best))
    w, _, it_primal = _kernels.primal_subgradient(frac, mu, base, present, w0, T, 0.5, target)
    c_primal = np.einsum("km,kmd->kd", w, mu)
    f_primal = float(group_costs(c_primal, stats).max())

    g_eq = _equalize(stats, g_dual)
    c_eq = _fix_degenerate(stats, g_eq, centers_from_gamma(g_eq, stats, fallback=True), config)
    f_eq = group_costs(c_eq, stats)

    cands = [(f_primal, 0, c_primal), (f_dual, 1, c_dual), (float(f_eq.max()), 2, c_eq)]
    # warm primal run from the best gamma: fixes clusters whose present groups all
    # have zero weight, where the fallback center need not be optimal
    g_best = g_eq if f_eq.max() <= f_dual else g_primal
    w = g_best[None, :] * frac
    w = np.where(w.sum(axis=1, keepdims=True) > 0, w, frac)
    w0 = w / np.where(w.sum(axis=1, keepdims=True) > 0, w.sum(axis=1, keepdims=True), 1.0)
    w, _, it_warm = _kernels.primal_subgradient(frac, mu, base, present, w0, T, 0.01, target)
    c_warm = np.einsum("km,kmd->kd", w, mu)
    cands.append((float(group_costs(c_warm, stats).max()), 3, c_warm))
    it_primal += it_warm

    centers = min(cands, key=lambda t: t[:2])[2]
    lower = max(q_best, _support_bound(g_primal, group_costs(centers_from_gamma(g_primal, stats, fallback=True), stats)),
                _support_bound(g_eq, group_costs(centers_from_gamma(g_eq, stats, fallback=True), stats)))
    return _report(stats, centers, g_dual, lower, it_dual + it_primal, "subgradient")


def _fix_degenerate(stats, gamma, centers, config):
    """Re-solve the centers of clusters where every present group has zero weight.

    Those clusters only serve groups outside the support of gamma, so their
    centers are chosen by the same min-max problem restricted to them, with
    the other clusters' contributions folded into the base costs.
    """
    weight = (gamma[None, :] * stats.frac).sum(axis=1)
    deg = np.flatnonzero((weight <= 0) & stats.present.any(axis=1))
    if deg.size == 0 or deg.size == stats.k:
        return centers
    groups = np.flatnonzero(stats.present[deg].any(axis=0))
    rest = np.setdiff1d(np.arange(stats.k), deg)
    diff = centers[rest, None, :] - stats.group_mean[rest][:, groups]
    extra = np.einsum("km,km->m", stats.frac[rest][:, groups], np.einsum("kmd,kmd->km", diff, diff))
    sub = GroupClusterStats.from_arrays(stats.frac[deg][:, groups], stats.group_mean[deg][:, groups],
                                        stats.base_cost[groups] + extra)
    out = np.array(centers)
    out[deg] = solve_subgradient(sub, config).centers
    return out


def _equalize(stats, gamma, iters=30):
    """Newton refinement of gamma on its support so the supported f_j are equal.

    At the optimum every group with positive weight attains the maximum, so
    this polishes the last digits a first-order method leaves behind.
    Returns ``gamma`` unchanged if no improvement is found.
    """
    S = np.flatnonzero(gamma > 1e-9 * gamma.max())
    if S.size < 2:
        return gamma

    def full(g):
        out = np.zeros(stats.m)
        out[S] = g / g.sum()
        return out

    def resid(g):
        f = group_costs(centers_from_gamma(full(g), stats, fallback=True), stats)[S]
        return f[1:] - f[0]

    g = gamma[S] / gamma[S].sum()
    r = resid(g)
    h = 1e-7
    for _ in range(iters):
        norm = float(np.abs(r).max())
        if norm <= 1e-15 * (1.0 + abs(float(stats.base_cost.max()))):
            break
        J = np.empty((S.size - 1, S.size))
        for q in range(S.size):
            e = np.zeros(S.size)
            e[q] = h
            J[:, q] = (resid(g + e) - r) / h
        A = np.vstack([J, np.ones(S.size)])
        step = np.linalg.lstsq(A, np.concatenate([-r, [0.0]]), rcond=None)[0]
        t = 1.0
        while t > 1e-6:
            cand = g + t * step
            if cand.min() > 0:
                rc = resid(cand)
                if np.abs(rc).max() < norm:
                    g, r = cand / cand.sum(), rc
                    break
            t *= 0.5
        else:
            break
    return full(g)


def _exact_means(stats):
    centers = np.ascontiguousarray(stats.group_mean[:, 0, :])
    return _report(stats, centers, np.ones(1), float(stats.base_cost[0]), 0, "means")


def solve_fair_centers(stats, config=None):
    """Dispatch used by Fair-Lloyd.

    auto: one group -> cluster means; two groups -> line search; more ->
    MWU, refined by the oracle when the certificate gap is above
    ``polish_tol * objective``.
    """
    config = config or SolverConfig()
    mode = config.mode
    if mode == "auto":
        if stats.m == 1:
            return _exact_means(stats)
        mode = "line_search" if stats.m == 2 else "mwu"
        if mode == "mwu":
            rep = solve_mwu(stats, config)
            if rep.certificate_gap > config.polish_tol * rep.objective:
                ref = solve_subgradient(stats, config)
                lower = max(rep.lower_bound, ref.lower_bound)
                best = ref if ref.objective < rep.objective else rep
                rep = replace(best, lower_bound=min(lower, best.objective),
                              certificate_gap=best.objective - min(lower, best.objective),
                              iterations=rep.iterations + ref.iterations,
                              method="mwu+subgradient")
            return rep
    if mode == "line_search":
        return line_search_2groups(stats, config)
    if mode == "mwu":
        return solve_mwu(stats, config)
    return solve_subgradient(stats, config)


def certificate_lower_bound(centers, stats, subset=None, gamma=None, tol=1e-6):
    """Lower bound min_{j in S} f_j(C) on the optimal fair objective.

    Sound only when C is stationary on Z_S, i.e. some convex combination of
    the gradients of f_j, j in S, vanishes at C. With ``gamma`` that
    combination is checked directly; without it the minimum-norm
    combination is computed. The residual must be at most
    ``tol * max(1, largest gradient norm)``.
    """
    c = as_centers(centers, stats.d)
    S = list(range(stats.m)) if subset is None else sorted({int(j) for j in subset})
    if not S or S[0] < 0 or S[-1] >= stats.m:
        raise InvalidArgumentError(f"subset must be a non-empty set of groups in [0, {stats.m})")
    grads = np.stack([(2.0 * stats.frac[:, j, None] * (c - stats.group_mean[:, j])).ravel() for j in S])
    scale = max(1.0, float(np.linalg.norm(grads, axis=1).max()))
    if gamma is not None:
        w = np.asarray(gamma, dtype=np.float64)[S]
        if np.any(w < 0) or w.sum() <= 0:
            raise InvalidCertificateError("gamma has no mass on the subset")
        w = w / w.sum()
    else:
        heavy = 1e6 * scale
        A = np.vstack([grads.T, np.full((1, len(S)), heavy)])
        rhs = np.concatenate([np.zeros(grads.shape[1]), [heavy]])
        w, _ = nnls(A, rhs)
        if w.sum() <= 0:
            raise InvalidCertificateError("no convex combination of gradients found")
        w = w / w.sum()
    resid = float(np.linalg.norm(w @ grads))
    if resid > tol * scale:
        raise InvalidCertificateError(
            f"centers are not stationary on Z_S (residual {resid:.3e} > {tol * scale:.3e})")
    return float(group_costs(c, stats)[S].min())
