"""Pure-numpy twins of the compiled kernels.

Reductions go through ``np.sum`` on contiguous 1-D data, which numpy
evaluates by pairwise summation.
"""
import numpy as np

_CHUNK = 4096


def nearest_center(points, centers):
    n = points.shape[0]
    labels = np.empty(n, np.int64)
    sqdist = np.empty(n, np.float64)
    for s in range(0, n, _CHUNK):
        block = points[s:s + _CHUNK]
        diff = block[:, None, :] - centers[None, :, :]
        dist = np.einsum("pkd,pkd->pk", diff, diff)
        # argmin returns the first minimum: lowest index wins ties
        arg = np.argmin(dist, axis=1)
        labels[s:s + _CHUNK] = arg
        sqdist[s:s + _CHUNK] = dist[np.arange(len(arg)), arg]
    return labels, sqdist


def _segments(cells, ncell):
    order = np.argsort(cells, kind="stable")
    counts = np.bincount(cells, minlength=ncell)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return order, counts, starts


def cell_stats(points, labels, groups, k, m):
    n, d = points.shape
    cells = labels * m + groups
    order, flat_counts, starts = _segments(cells, k * m)
    means = np.zeros((k * m, d))
    scatter = np.zeros(k * m)
    for c in np.flatnonzero(flat_counts):
        idx = order[starts[c]:starts[c] + flat_counts[c]]
        block = points[idx]
        sums = np.ascontiguousarray(block.T).sum(axis=1)
        mean = sums / flat_counts[c]
        means[c] = mean
        dev = block - mean
        scatter[c] = np.sum(np.einsum("pd,pd->p", dev, dev))
    return (flat_counts.reshape(k, m).astype(np.int64),
            means.reshape(k, m, d), scatter.reshape(k, m))


def assigned_cost(points, centers, labels, groups, subset):
    if subset >= 0:
        mask = groups == subset
        points = points[mask]
        labels = labels[mask]
    diff = points - centers[labels]
    return float(np.sum(np.einsum("pd,pd->p", diff, diff)))


def group_costs(centers, frac, mu, base):
    diff = centers[:, None, :] - mu
    sq = np.einsum("kmd,kmd->km", diff, diff)
    return base + np.sum(np.where(frac > 0, frac * sq, 0.0), axis=0)


def centers_from_gamma(gamma, frac, mu):
    w = gamma[None, :] * frac
    den = w.sum(axis=1)
    degenerate = ~(den > 0)
    fallback = frac.sum(axis=1)
    w = np.where(degenerate[:, None], frac, w)
    den = np.where(degenerate, fallback, den)
    safe = np.where(den > 0, den, 1.0)
    centers = np.einsum("km,kmd->kd", w / safe[:, None], mu)
    return centers, degenerate


def project_simplex(v, mask):
    out = np.zeros_like(v)
    if not mask.any():
        return out
    u = np.sort(v[mask])[::-1]
    css = np.cumsum(u)
    r = np.arange(1, len(u) + 1)
    rho = np.nonzero(u - (css - 1.0) / r > 0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1)
    out[mask] = np.maximum(v[mask] - theta, 0.0)
    return out


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
        F, fmin = f.max(), f.min()
        if F < best_f:
            best_f = F
            best_gamma = gamma.copy()
        lower = max(lower, fmin)
        dmax = F - fmin
        if dmax <= 0.0:
            break
        gamma = gamma * (1.0 - (F - f) / (np.sqrt(t + 1.0) * dmax))
        gamma = gamma / gamma.sum()
    return best_gamma, best_f, lower, it


def dual_ascent(frac, mu, base, T, tol):
    m = frac.shape[1]
    full = np.ones(m, bool)
    gamma = np.full(m, 1.0 / m)
    centers, _ = centers_from_gamma(gamma, frac, mu)
    f = group_costs(centers, frac, mu, base)
    q = float(gamma @ f)
    best_f, best_primal = f.max(), gamma.copy()
    best_q, best_dual = q, gamma.copy()
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
            q2 = float(cand @ f2)
            delta = cand - gamma
            moved = float(delta @ delta)
            if q2 >= q + float(f @ delta) - moved / (2.0 * step):
                accepted = True
                break
            step *= 0.5
        if not accepted or moved == 0.0:
            break
        gamma, f, q = cand, f2, q2
        if f.max() < best_f:
            best_f, best_primal = f.max(), gamma.copy()
        if q > best_q:
            best_q, best_dual = q, gamma.copy()
        step *= 2.0
    return best_primal, best_f, best_dual, best_q, it


def primal_subgradient(frac, mu, base, present, weights, T, scale, target):
    k, m, d = mu.shape
    W = weights.copy()
    best_w, best_f = W.copy(), np.inf
    it = 0
    for t in range(1, T + 1):
        it = t
        centers = np.einsum("km,kmd->kd", W, mu)
        f = group_costs(centers, frac, mu, base)
        js = int(np.argmax(f))
        if f[js] < best_f:
            best_f, best_w = f[js], W.copy()
        if best_f <= target:
            break
        resid = centers - mu[:, js, :]
        grad = 2.0 * frac[:, js, None] * np.einsum("kd,kmd->km", resid, mu)
        grad = np.where(present, grad, 0.0)
        norm = np.sqrt(np.sum(grad * grad))
        if norm == 0.0:
            break
        W = W - (scale / (np.sqrt(t) * norm)) * grad
        W = np.stack([project_simplex(W[i], present[i]) for i in range(k)])
    return best_w, best_f, it
