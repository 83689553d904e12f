"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` operation for operation (stable sort order,
sequential cumulative sums, same tie rule, same splitmix64 stream) so both
backends grow bit-identical trees.
"""

from __future__ import annotations

import numpy as np

SPLIT_REL_TOL = 1e-12
_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Tiny counter-based generator used for per-node feature subsets."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def _feature_subset(rng: SplitMix64, p: int, mtry: int) -> list[int]:
    if mtry >= p:
        return list(range(p))
    perm = list(range(p))
    for i in range(mtry):
        j = i + rng.next() % (p - i)
        perm[i], perm[j] = perm[j], perm[i]
    return sorted(perm[:mtry])


def _best_split(X, y, idx, features, min_samples_leaf):
    """Return (feature, threshold) or None for the node holding ``idx``."""
    m = idx.size
    ys = y[idx]
    csum_all = np.cumsum(ys)
    total = csum_all[-1]
    sumsq = np.cumsum(ys * ys)[-1]
    tol = SPLIT_REL_TOL * sumsq
    parent_score = total * total / m

    n_left = np.arange(1, m, dtype=np.float64)
    n_right = m - n_left
    size_ok = (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)

    cands = []  # (feature, scores, thresholds) with non-candidates at -inf
    best = -np.inf
    for f in features:
        col = X[idx, f]
        order = np.argsort(col, kind="stable")
        v = col[order]
        csum = np.cumsum(ys[order])
        s_left = csum[:-1]
        s_right = csum[-1] - s_left
        scores = s_left * s_left / n_left + s_right * s_right / n_right
        ok = size_ok & (v[:-1] < v[1:])
        scores = np.where(ok, scores, -np.inf)
        if ok.any():
            best = max(best, scores.max())
        cands.append((f, scores, v))
    if not np.isfinite(best) or best - parent_score <= tol:
        return None
    for f, scores, v in cands:
        hits = np.flatnonzero(scores >= best - tol)
        if hits.size:
            k = hits[0]
            thr = 0.5 * (v[k] + v[k + 1])
            if thr >= v[k + 1]:
                thr = v[k]
            return f, thr
    return None


def build_tree(X, y, idx, max_depth, min_samples_leaf, mtry, seed):
    """Grow one CART regression tree on rows ``idx`` of ``X``.

    Returns flat node arrays ``(feature, threshold, left, right, value,
    n_samples)`` in pre-order; leaves have feature/left/right = -1.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    p = X.shape[1]
    rng = SplitMix64(seed)
    feature, threshold, left, right, value, count = [], [], [], [], [], []

    def grow(node_idx, depth):
        nid = len(feature)
        m = node_idx.size
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        # mean taken relative to the first target: exact when all targets are equal
        y0 = y[node_idx[0]]
        value.append(y0 + np.cumsum(y[node_idx] - y0)[-1] / m)
        count.append(m)
        if m < 2 * min_samples_leaf or (max_depth >= 0 and depth >= max_depth):
            return nid
        features = _feature_subset(rng, p, mtry)
        split = _best_split(X, y, node_idx, features, min_samples_leaf)
        if split is None:
            return nid
        f, thr = split
        go_left = X[node_idx, f] <= thr
        feature[nid] = f
        threshold[nid] = thr
        left[nid] = grow(node_idx[go_left], depth + 1)
        right[nid] = grow(node_idx[~go_left], depth + 1)
        return nid

    grow(idx, 0)
    return (
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=np.float64),
        np.asarray(count, dtype=np.int64),
    )


def predict_ensemble(X, feature, threshold, left, right, value, roots, init, scale):
    """``init + scale * sum(tree_t(x))`` accumulated tree by tree."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    out = np.full(n, float(init))
    rows = np.arange(n)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            a = np.flatnonzero(active)
            nd = node[a]
            go_left = X[rows[a], feature[nd]] <= threshold[nd]
            node[a] = np.where(go_left, left[nd], right[nd])
            active[a] = feature[node[a]] >= 0
        out += scale * value[node]
    return out


def lasso_cd(gram, corr, beta, lam, max_iter, tol):
    """Cyclic coordinate descent on the covariance form, updating ``beta`` in place.

    Returns the number of sweeps; ``max_iter`` means no convergence.
    """
    p = beta.shape[0]
    G = gram.tolist()
    c = corr.tolist()
    b = beta.tolist()
    sweeps = max_iter
    for it in range(max_iter):
        max_delta = 0.0
        for j in range(p):
            Gj = G[j]
            rho = c[j]
            for k in range(p):
                if k != j:
                    rho -= Gj[k] * b[k]
            if rho > lam:
                new = (rho - lam) / Gj[j]
            elif rho < -lam:
                new = (rho + lam) / Gj[j]
            else:
                new = 0.0
            delta = abs(new - b[j])
            if delta > max_delta:
                max_delta = delta
            b[j] = new
        if max_delta < tol:
            sweeps = it + 1
            break
    beta[:] = b
    return sweeps
