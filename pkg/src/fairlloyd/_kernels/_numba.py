"""Numba-compiled hot loops.

Every function here has a twin with the same signature in ``_numpy``.
Accumulations over points use Kahan compensation and a fixed sequential
order, so results are deterministic for a given input.
"""
import numpy as np
from numba import njit

_jit = njit(cache=True, nogil=True)


@_jit
def nearest_center(points, centers):
    n, d = points.shape
    k = centers.shape[0]
    labels = np.empty(n, np.int64)
    sqdist = np.empty(n, np.float64)
    for p in range(n):
        best = np.inf
        arg = 0
        for i in range(k):
            acc = 0.0
            for q in range(d):
                e = points[p, q] - centers[i, q]
                acc += e * e
            # strict < keeps the lowest index on ties
            if acc < best:
                best = acc
                arg = i
        labels[p] = arg
        sqdist[p] = best
    return labels, sqdist


@_jit
def cell_stats(points, labels, groups, k, m):
    n, d = points.shape
    counts = np.zeros((k, m), np.int64)
    sums = np.zeros((k, m, d))
    comp = np.zeros((k, m, d))
    for p in range(n):
        i = labels[p]
        j = groups[p]
        counts[i, j] += 1
        for q in range(d):
            y = points[p, q] - comp[i, j, q]
            t = sums[i, j, q] + y
            comp[i, j, q] = (t - sums[i, j, q]) - y
            sums[i, j, q] = t
    means = np.zeros((k, m, d))
    for i in range(k):
        for j in range(m):
            if counts[i, j] > 0:
                for q in range(d):
                    means[i, j, q] = sums[i, j, q] / counts[i, j]
    scatter = np.zeros((k, m))
    scomp = np.zeros((k, m))
    for p in range(n):
        i = labels[p]
        j = groups[p]
        acc = 0.0
        for q in range(d):
            e = points[p, q] - means[i, j, q]
            acc += e * e
        y = acc - scomp[i, j]
        t = scatter[i, j] + y
        scomp[i, j] = (t - scatter[i, j]) - y
        scatter[i, j] = t
    return counts, means, scatter


@_jit
def assigned_cost(points, centers, labels, groups, subset):
    n, d = points.shape
    total = 0.0
    comp = 0.0
    for p in range(n):
        if subset >= 0 and groups[p] != subset:
            continue
        i = labels[p]
        acc = 0.0
        for q in range(d):
            e = points[p, q] - centers[i, q]
            acc += e * e
        y = acc - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


@_jit
def group_costs(centers, frac, mu, base):
    k, m, d = mu.shape
    out = np.empty(m)
    for j in range(m):
        total = base[j]
        comp = 0.0
        for i in range(k):
            if frac[i, j] == 0.0:
                continue
            acc = 0.0
            for q in range(d):
                e = centers[i, q] - mu[i, j, q]
                acc += e * e
            y = frac[i, j] * acc - comp
            t = total + y
            comp = (t - total) - y
            total = t
        out[j] = total
    return out


@_jit
def centers_from_gamma(gamma, frac, mu):
    k, m, d = mu.shape
    centers = np.zeros((k, d))
    degenerate = np.zeros(k, np.bool_)
    for i in range(k):
        den = 0.0
        for j in range(m):
            den += gamma[j] * frac[i, j]
        if den > 0.0:
            for j in range(m):
                w = gamma[j] * frac[i, j]
                if w > 0.0:
                    w = w / den
                    for q in range(d):
                        centers[i, q] += w * mu[i, j, q]
        else:
            degenerate[i] = True
            den = 0.0
            for j in range(m):
                den += frac[i, j]
            if den > 0.0:
                for j in range(m):
                    if frac[i, j] > 0.0:
                        w = frac[i, j] / den
                        for q in range(d):
                            centers[i, q] += w * mu[i, j, q]
    return centers, degenerate


@_jit
def project_simplex(v, mask):
    m = v.shape[0]
    u = np.empty(m)
    cnt = 0
    for j in range(m):
        if mask[j]:
            u[cnt] = v[j]
            cnt += 1
    u = np.sort(u[:cnt])[::-1]
    css = 0.0
    theta = 0.0
    for r in range(cnt):
        css += u[r]
        th = (css - 1.0) / (r + 1)
        if u[r] - th > 0.0:
            theta = th
    out = np.zeros(m)
    for j in range(m):
        if mask[j]:
            out[j] = max(v[j] - theta, 0.0)
    return out


@_jit
def mwu(frac, mu, base, T):
    m = frac.shape[1]
    gamma = np.full(m, 1.0 / m)
    best_gamma = gamma.copy()
    best_f = np.inf
    lower = -np.inf
    it = 0
    for t in range(1, T + 1):
        it = t
        centers, _ = centers_from_gamma(gamma, frac, mu)
        f = group_costs(centers, frac, mu, base)
        F = f.max()
        fmin = f.min()
        if F < best_f:
            best_f = F
            best_gamma[:] = gamma
        if fmin > lower:
            lower = fmin
        dmax = F - fmin
        if dmax <= 0.0:
            break
        damp = np.sqrt(t + 1.0) * dmax
        total = 0.0
        for j in range(m):
            gamma[j] *= 1.0 - (F - f[j]) / damp
            total += gamma[j]
        for j in range(m):
            gamma[j] /= total
    return best_gamma, best_f, lower, it


@_jit
def dual_ascent(frac, mu, base, T, tol):
    m = frac.shape[1]
    full = np.ones(m, np.bool_)
    gamma = np.full(m, 1.0 / m)
    centers, _ = centers_from_gamma(gamma, frac, mu)
    f = group_costs(centers, frac, mu, base)
    q = 0.0
    for j in range(m):
        q += gamma[j] * f[j]
    best_f = f.max()
    best_primal = gamma.copy()
    best_q = q
    best_dual = gamma.copy()
    step = 1.0 / max(1.0, best_f)
    it = 0
    for t in range(1, T + 1):
        it = t
        if best_f - best_q <= tol * max(1.0, abs(best_f)):
            break
        accepted = False
        moved = 0.0
        for _ in range(80):
            cand = project_simplex(gamma + step * f, full)
            c2, _ = centers_from_gamma(cand, frac, mu)
            f2 = group_costs(c2, frac, mu, base)
            q2 = 0.0
            lin = 0.0
            moved = 0.0
            for j in range(m):
                q2 += cand[j] * f2[j]
                dj = cand[j] - gamma[j]
                lin += f[j] * dj
                moved += dj * dj
            if q2 >= q + lin - moved / (2.0 * step):
                accepted = True
                break
            step *= 0.5
        if not accepted or moved == 0.0:
            break
        gamma = cand
        f = f2
        q = q2
        if f.max() < best_f:
            best_f = f.max()
            best_primal[:] = gamma
        if q > best_q:
            best_q = q
            best_dual[:] = gamma
        step *= 2.0
    return best_primal, best_f, best_dual, best_q, it


@_jit
def primal_subgradient(frac, mu, base, present, weights, T, scale, target):
    k, m, d = mu.shape
    W = weights.copy()
    best_w = W.copy()
    best_f = np.inf
    centers = np.zeros((k, d))
    grad = np.zeros((k, m))
    it = 0
    for t in range(1, T + 1):
        it = t
        for i in range(k):
            for q in range(d):
                acc = 0.0
                for j in range(m):
                    acc += W[i, j] * mu[i, j, q]
                centers[i, q] = acc
        f = group_costs(centers, frac, mu, base)
        # smallest index among the maximizers
        js = 0
        for j in range(1, m):
            if f[j] > f[js]:
                js = j
        if f[js] < best_f:
            best_f = f[js]
            best_w[:, :] = W
        if best_f <= target:
            break
        norm = 0.0
        for i in range(k):
            for l in range(m):
                acc = 0.0
                if present[i, l]:
                    for q in range(d):
                        acc += (centers[i, q] - mu[i, js, q]) * mu[i, l, q]
                grad[i, l] = 2.0 * frac[i, js] * acc
                norm += grad[i, l] * grad[i, l]
        if norm == 0.0:
            break
        step = scale / (np.sqrt(t) * np.sqrt(norm))
        for i in range(k):
            W[i] = project_simplex(W[i] - step * grad[i], present[i])
    return best_w, best_f, it
