"""Independent reference implementations used as test oracles.

Written in plain Python (lists and loops) so they share no code path with
the package.
"""

import math


def brute_force_tree(X, y, rows=None, depth=0, max_depth=None, min_leaf=1):
    """Exhaustive CART: returns a nested dict tree.

    Every feature and every midpoint between consecutive distinct values is
    scored by direct SSE. Near-ties (within 1e-12 * sum(y^2) of the node)
    resolve to the first candidate in (feature, threshold) order.
    """
    if rows is None:
        rows = list(range(len(y)))
    ys = [y[i] for i in rows]
    m = len(ys)
    total = 0.0
    for v in ys:
        total += v
    mean = total / m
    leaf = {"value": mean, "n": m}
    if (max_depth is not None and depth >= max_depth) or m < 2 * min_leaf:
        return leaf
    tol = 1e-12 * sum(v * v for v in ys)

    def sse(vals):
        mu = sum(vals) / len(vals)
        return sum((v - mu) ** 2 for v in vals)

    parent = sse(ys)
    cands = []
    for f in range(len(X[0])):
        distinct = sorted({X[i][f] for i in rows})
        for a, b in zip(distinct, distinct[1:]):
            thr = 0.5 * (a + b)
            if thr >= b:
                thr = a
            left = [y[i] for i in rows if X[i][f] <= thr]
            right = [y[i] for i in rows if X[i][f] > thr]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            cands.append((f, thr, sse(left) + sse(right)))
    if not cands:
        return leaf
    best = min(c[2] for c in cands)
    if not parent - best > tol:
        return leaf
    f, thr, _ = next(c for c in cands if c[2] <= best + tol)
    lrows = [i for i in rows if X[i][f] <= thr]
    rrows = [i for i in rows if X[i][f] > thr]
    return {
        "feature": f, "threshold": thr, "value": mean, "n": m,
        "left": brute_force_tree(X, y, lrows, depth + 1, max_depth, min_leaf),
        "right": brute_force_tree(X, y, rrows, depth + 1, max_depth, min_leaf),
    }


def flatten_preorder(node, out=None):
    """(feature, threshold, value, n) tuples in pre-order; leaves use feature -1."""
    if out is None:
        out = []
    if "feature" in node:
        out.append((node["feature"], node["threshold"], node["value"], node["n"]))
        flatten_preorder(node["left"], out)
        flatten_preorder(node["right"], out)
    else:
        out.append((-1, 0.0, node["value"], node["n"]))
    return out


def tree_predict(node, x):
    while "feature" in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node["value"]


def solve_gauss(A, b):
    """Gaussian elimination with partial pivoting on lists of floats."""
    n = len(A)
    M = [list(map(float, A[i])) + [float(b[i])] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, n):
            factor = M[r][col] / M[col][col]
            for c in range(col, n + 1):
                M[r][c] -= factor * M[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = M[r][n] - sum(M[r][c] * x[c] for c in range(r + 1, n))
        x[r] = acc / M[r][r]
    return x


def ols_normal_equations(X, y):
    """Least-squares slopes and intercept via centred normal equations."""
    n, p = len(X), len(X[0])
    xm = [sum(X[i][j] for i in range(n)) / n for j in range(p)]
    ym = sum(y) / n
    A = [[sum((X[i][a] - xm[a]) * (X[i][b] - xm[b]) for i in range(n)) for b in range(p)] for a in range(p)]
    rhs = [sum((X[i][a] - xm[a]) * (y[i] - ym) for i in range(n)) for a in range(p)]
    beta = solve_gauss(A, rhs)
    return beta, ym - sum(beta[j] * xm[j] for j in range(p))


def pearson(x, z):
    n = len(x)
    mx, mz = sum(x) / n, sum(z) / n
    cov = sum((a - mx) * (b - mz) for a, b in zip(x, z))
    sx = math.sqrt(sum((a - mx) ** 2 for a in x))
    sz = math.sqrt(sum((b - mz) ** 2 for b in z))
    return cov / (sx * sz)


# Index formulas written out directly from their definitions.
def nd(a, b):
    return (a - b) / (a + b)


def hand_indices(r):
    """All eleven indices from a {wavelength: reflectance} dict (nir 800, red 670, green 550)."""
    nir, red, green = r[800], r[670], r[550]
    return {
        "ndvi": nd(nir, red),
        "green_ndvi": nd(nir, green),
        "rdvi": (nir - red) / math.sqrt(nir + red),
        "mtvi2": 1.5 * (1.2 * (nir - green) - 2.5 * (red - green))
        / math.sqrt((2 * nir + 1) ** 2 - (6 * nir - 5 * math.sqrt(red)) - 0.5),
        "water_index": r[900] / r[970],
        "npci": nd(r[680], r[430]),
        "osavi": 1.16 * (r[800] - r[670]) / (r[800] + r[670] + 0.16),
        "red_edge": r[750] / r[710],
        "nir1": nd(r[800], r[847]),
        "red_blue": nd(r[660], r[420]),
        "water_band": nd(r[791], r[970]),
    }
