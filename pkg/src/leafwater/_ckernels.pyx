# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: CART growth, ensemble prediction, lasso coordinate descent.

Semantics match ``_pykernels`` exactly; see that module for the contract.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport qsort, malloc, free
from libc.math cimport fabs, INFINITY
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef double SPLIT_REL_TOL = 1e-12


cdef struct Keyed:
    double v
    int64_t pos


cdef int _cmp_keyed(const void *a, const void *b) noexcept nogil:
    cdef const Keyed *ka = <const Keyed *> a
    cdef const Keyed *kb = <const Keyed *> b
    if ka.v < kb.v:
        return -1
    if ka.v > kb.v:
        return 1
    if ka.pos < kb.pos:
        return -1
    if ka.pos > kb.pos:
        return 1
    return 0


cdef inline uint64_t _splitmix_next(uint64_t *state) noexcept nogil:
    cdef uint64_t z
    state[0] += 0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef class _TreeBuffer:
    cdef list feature, threshold, left, right, value, count

    def __cinit__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.count = []


cdef struct Work:
    # scratch shared by every node of one tree
    Keyed *keyed
    double *scores      # mtry * n
    double *vals        # mtry * n
    int64_t *perm
    int64_t *subset


cdef int _grow(const double[:, ::1] X, const double[::1] y, int64_t[::1] idx,
               int64_t lo, int64_t hi, int depth, int max_depth,
               int min_samples_leaf, int mtry, uint64_t *rng, Work *w,
               _TreeBuffer buf) except -1:
    cdef int64_t m = hi - lo
    cdef int64_t p = X.shape[1]
    cdef int64_t nid = len(buf.feature)
    cdef int64_t k, i, j, f, t, tmp, n_sub, best_f = -1, best_k = -1, n_left_cnt
    cdef double acc = 0.0, sumsq = 0.0, total, parent_score, tol, best = -INFINITY
    cdef double y0 = y[idx[lo]], dev = 0.0
    cdef double s_left, s_right, nl, nr, score, thr = 0.0
    cdef int found
    cdef int64_t *tmpbuf

    for k in range(lo, hi):
        acc += y[idx[k]]
        sumsq += y[idx[k]] * y[idx[k]]
        dev += y[idx[k]] - y0
    total = acc
    buf.feature.append(-1)
    buf.threshold.append(0.0)
    buf.left.append(-1)
    buf.right.append(-1)
    buf.value.append(y0 + dev / m)  # exact for constant targets
    buf.count.append(m)

    if m < 2 * min_samples_leaf or (max_depth >= 0 and depth >= max_depth):
        return nid

    # feature subset: partial Fisher-Yates then ascending order
    if mtry >= p:
        n_sub = p
        for j in range(p):
            w.subset[j] = j
    else:
        n_sub = mtry
        for j in range(p):
            w.perm[j] = j
        for i in range(mtry):
            j = i + <int64_t> (_splitmix_next(rng) % <uint64_t> (p - i))
            tmp = w.perm[i]
            w.perm[i] = w.perm[j]
            w.perm[j] = tmp
        for i in range(mtry):
            w.subset[i] = w.perm[i]
        # insertion sort, mtry is small
        for i in range(1, mtry):
            tmp = w.subset[i]
            j = i - 1
            while j >= 0 and w.subset[j] > tmp:
                w.subset[j + 1] = w.subset[j]
                j -= 1
            w.subset[j + 1] = tmp

    parent_score = total * total / m
    tol = SPLIT_REL_TOL * sumsq

    with nogil:
        for t in range(n_sub):
            f = w.subset[t]
            for k in range(m):
                w.keyed[k].v = X[idx[lo + k], f]
                w.keyed[k].pos = k
            qsort(w.keyed, m, sizeof(Keyed), _cmp_keyed)
            acc = 0.0
            for k in range(m):
                w.vals[t * m + k] = w.keyed[k].v
            for k in range(m - 1):
                acc += y[idx[lo + w.keyed[k].pos]]
                w.scores[t * m + k] = -INFINITY
                nl = <double> (k + 1)
                nr = <double> (m - k - 1)
                if nl < min_samples_leaf or nr < min_samples_leaf:
                    continue
                if not (w.keyed[k].v < w.keyed[k + 1].v):
                    continue
                w.scores[t * m + k] = acc
            # csum[-1] in sorted order
            acc += y[idx[lo + w.keyed[m - 1].pos]]
            for k in range(m - 1):
                s_left = w.scores[t * m + k]
                if s_left == -INFINITY:
                    continue
                s_right = acc - s_left
                nl = <double> (k + 1)
                nr = <double> (m - k - 1)
                score = s_left * s_left / nl + s_right * s_right / nr
                w.scores[t * m + k] = score
                if score > best:
                    best = score

        found = 0
        if best != -INFINITY and best - parent_score > tol:
            for t in range(n_sub):
                for k in range(m - 1):
                    if w.scores[t * m + k] >= best - tol:
                        best_f = w.subset[t]
                        thr = 0.5 * (w.vals[t * m + k] + w.vals[t * m + k + 1])
                        if thr >= w.vals[t * m + k + 1]:
                            thr = w.vals[t * m + k]
                        found = 1
                        break
                if found:
                    break

    if not found:
        return nid

    # stable partition of idx[lo:hi]: left rows first, original order kept
    tmpbuf = <int64_t *> malloc(m * sizeof(int64_t))
    if tmpbuf == NULL:
        raise MemoryError()
    n_left_cnt = 0
    for k in range(lo, hi):
        if X[idx[k], best_f] <= thr:
            idx[lo + n_left_cnt] = idx[k]
            n_left_cnt += 1
        else:
            tmpbuf[k - lo - n_left_cnt] = idx[k]
    for k in range(m - n_left_cnt):
        idx[lo + n_left_cnt + k] = tmpbuf[k]
    free(tmpbuf)

    buf.feature[nid] = best_f
    buf.threshold[nid] = thr
    buf.left[nid] = _grow(X, y, idx, lo, lo + n_left_cnt, depth + 1, max_depth,
                          min_samples_leaf, mtry, rng, w, buf)
    buf.right[nid] = _grow(X, y, idx, lo + n_left_cnt, hi, depth + 1, max_depth,
                           min_samples_leaf, mtry, rng, w, buf)
    return nid


def build_tree(X, y, idx, int max_depth, int min_samples_leaf, int mtry, seed):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef int64_t[::1] iv = np.array(idx, dtype=np.int64, copy=True)
    cdef int64_t n = iv.shape[0]
    cdef int64_t p = Xv.shape[1]
    cdef int64_t width = mtry if mtry < p else p
    cdef uint64_t state = <uint64_t> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Work w
    cdef _TreeBuffer buf = _TreeBuffer()

    w.keyed = <Keyed *> malloc(max(n, 1) * sizeof(Keyed))
    w.scores = <double *> malloc(max(n * width, 1) * sizeof(double))
    w.vals = <double *> malloc(max(n * width, 1) * sizeof(double))
    w.perm = <int64_t *> malloc(max(p, 1) * sizeof(int64_t))
    w.subset = <int64_t *> malloc(max(p, 1) * sizeof(int64_t))
    try:
        if w.keyed == NULL or w.scores == NULL or w.vals == NULL or w.perm == NULL or w.subset == NULL:
            raise MemoryError()
        _grow(Xv, yv, iv, 0, n, 0, max_depth, min_samples_leaf, mtry, &state, &w, buf)
    finally:
        free(w.keyed)
        free(w.scores)
        free(w.vals)
        free(w.perm)
        free(w.subset)
    return (
        np.asarray(buf.feature, dtype=np.int64),
        np.asarray(buf.threshold, dtype=np.float64),
        np.asarray(buf.left, dtype=np.int64),
        np.asarray(buf.right, dtype=np.int64),
        np.asarray(buf.value, dtype=np.float64),
        np.asarray(buf.count, dtype=np.int64),
    )


def predict_ensemble(X, feature, threshold, left, right, value, roots, double init, double scale):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const int64_t[::1] fv = np.ascontiguousarray(feature, dtype=np.int64)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const int64_t[::1] lv = np.ascontiguousarray(left, dtype=np.int64)
    cdef const int64_t[::1] rv = np.ascontiguousarray(right, dtype=np.int64)
    cdef const double[::1] vv = np.ascontiguousarray(value, dtype=np.float64)
    cdef const int64_t[::1] rootv = np.ascontiguousarray(roots, dtype=np.int64)
    cdef int64_t n = Xv.shape[0]
    cdef int64_t n_trees = rootv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef int64_t i, t, node
    cdef double acc
    with nogil:
        for i in range(n):
            acc = init
            for t in range(n_trees):
                node = rootv[t]
                while fv[node] >= 0:
                    if Xv[i, fv[node]] <= tv[node]:
                        node = lv[node]
                    else:
                        node = rv[node]
                acc = acc + scale * vv[node]
            ov[i] = acc
    return out


def lasso_cd(gram, corr, double[::1] beta, double lam, int64_t max_iter, double tol):
    cdef const double[:, ::1] G = np.ascontiguousarray(gram, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(corr, dtype=np.float64)
    cdef int64_t p = beta.shape[0]
    cdef int64_t it, j, k, sweeps = max_iter
    cdef double rho, new, delta, max_delta
    with nogil:
        for it in range(max_iter):
            max_delta = 0.0
            for j in range(p):
                rho = c[j]
                for k in range(p):
                    if k != j:
                        rho = rho - G[j, k] * beta[k]
                if rho > lam:
                    new = (rho - lam) / G[j, j]
                elif rho < -lam:
                    new = (rho + lam) / G[j, j]
                else:
                    new = 0.0
                delta = fabs(new - beta[j])
                if delta > max_delta:
                    max_delta = delta
                beta[j] = new
            if max_delta < tol:
                sweeps = it + 1
                break
    return sweeps
