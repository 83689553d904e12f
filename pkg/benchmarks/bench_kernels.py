"""Compiled vs pure-Python kernel timings.

Run ``python3 benchmarks/bench_kernels.py``. Each kernel runs on identical
inputs through both backends; outputs are checked for exact equality before
timings are reported.
"""

import argparse
import time

import numpy as np

from leafwater import kernels


def _best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _cases(rng, n, p):
    X = rng.normal(size=(n, p))
    y = X[:, 0] - 0.5 * X[:, 1] ** 2 + 0.1 * rng.normal(size=n)
    idx = rng.integers(0, n, size=n).astype(np.int64)
    Xs = (X - X.mean(0)) / X.std(0)
    yc = y - y.mean()
    gram = Xs.T @ Xs / n
    corr = Xs.T @ yc / n
    lam = 0.05 * np.abs(corr).max()

    def tree(mod, depth, mtry):
        return lambda: mod.build_tree(X, y, idx, depth, 1, mtry, 7)

    trees = [kernels.build_tree(X, y, np.random.default_rng(s).integers(0, n, size=n).astype(np.int64),
                                3, 2, p, 0) for s in range(50)]
    offs = np.cumsum([0] + [t[0].size for t in trees])
    cat = [np.concatenate([t[k] for t in trees]) for k in range(5)]
    shift = np.repeat(offs[:-1], [t[0].size for t in trees])
    left = np.where(cat[2] >= 0, cat[2] + shift, -1)
    right = np.where(cat[3] >= 0, cat[3] + shift, -1)
    roots = offs[:-1].astype(np.int64)
    Xp = rng.normal(size=(20000, p))

    def forest(mod):
        return lambda: mod.predict_ensemble(Xp, cat[0], cat[1], left, right, cat[4], roots, 0.5, 0.1)

    def lasso(mod):
        def run():
            beta = np.zeros(p)
            sweeps = mod.lasso_cd(gram, corr, beta, lam, 100000, 1e-10)
            return beta, np.array([sweeps])
        return run

    return {
        "tree depth 3 (GBM stage)": lambda mod: tree(mod, 3, p),
        "tree unbounded, mtry=p/3 (RF tree)": lambda mod: tree(mod, -1, max(1, p // 3)),
        "ensemble predict 50 trees x 20000 rows": forest,
        "lasso coordinate descent": lasso,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--p", type=int, default=11)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    compiled = kernels.compiled_backend()
    if compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    cases = _cases(rng, args.n, args.p)
    print(f"n={args.n} p={args.p} best of {args.repeat}")
    print(f"{'kernel':<42}{'python s':>12}{'compiled s':>12}{'speedup':>10}")
    for name, make in cases.items():
        py_fn, c_fn = make(kernels.python_backend), make(compiled)
        t_py, out_py = _best_of(py_fn, args.repeat)
        t_c, out_c = _best_of(c_fn, args.repeat)
        out_py = out_py if isinstance(out_py, tuple) else (out_py,)
        out_c = out_c if isinstance(out_c, tuple) else (out_c,)
        for a, b in zip(out_py, out_c):
            if not np.array_equal(np.asarray(a), np.asarray(b)):
                raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<42}{t_py:>12.4f}{t_c:>12.5f}{t_py / t_c:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
