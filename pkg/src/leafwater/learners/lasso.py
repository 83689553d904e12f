"""Lasso by cyclic coordinate descent with k-fold selection of the penalty."""

from __future__ import annotations

from dataclasses import asdict
from typing import Optional, Sequence

import numpy as np

from .. import kernels
from ..errors import InsufficientData, SingularInput
from .cv import kfold_indices, train_test_pairs
from .model import LassoPayload, ModelType, Standardizer, TrainedModel
from .params import LassoParams
from .tree import check_xy


def lambda_max(Xs: np.ndarray, yc: np.ndarray) -> float:
    """Smallest penalty at which every coefficient is zero."""
    return float(np.max(np.abs(Xs.T @ yc)) / Xs.shape[0])


def lasso_objective(Xs, yc, beta, lam) -> float:
    r = yc - Xs @ beta
    return 0.5 * float(r @ r) / Xs.shape[0] + lam * float(np.sum(np.abs(beta)))


def coordinate_descent(Xs, yc, lam, beta0=None, max_iter=100_000, tol=1e-7):
    """Minimise ``0.5/n * ||yc - Xs b||^2 + lam * ||b||_1``.

    Returns ``(beta, sweeps)``; sweeps equal to ``max_iter`` means the
    coordinate changes never fell below ``tol``.
    """
    n = Xs.shape[0]
    gram = np.ascontiguousarray(Xs.T @ Xs / n)
    corr = np.ascontiguousarray(Xs.T @ yc / n)
    beta = np.zeros(Xs.shape[1]) if beta0 is None else np.array(beta0, dtype=np.float64)
    sweeps = kernels.lasso_cd(gram, corr, beta, float(lam), int(max_iter), float(tol))
    return beta, sweeps


def lasso_path(Xs, yc, grid, max_iter=100_000, tol=1e-7) -> np.ndarray:
    """Warm-started solutions for each penalty of a descending grid, shape (len(grid), p)."""
    n, p = Xs.shape
    gram = np.ascontiguousarray(Xs.T @ Xs / n)
    corr = np.ascontiguousarray(Xs.T @ yc / n)
    beta = np.zeros(p)
    out = np.empty((len(grid), p))
    for i, lam in enumerate(grid):
        kernels.lasso_cd(gram, corr, beta, float(lam), int(max_iter), float(tol))
        out[i] = beta
    return out


def default_grid(lam_max: float, n_lambdas: int, ratio: float) -> np.ndarray:
    top = lam_max if lam_max > 0 else 1.0
    return np.logspace(np.log10(top), np.log10(top * ratio), n_lambdas)


def _dedupe_descending(grid) -> np.ndarray:
    return np.unique(np.asarray(grid, dtype=np.float64))[::-1].copy()


def fit_lasso_cv(X, y, params: LassoParams = LassoParams(), seed: int = 0,
                 feature_names: Optional[Sequence[str]] = None) -> TrainedModel:
    """Pick the penalty with the lowest mean k-fold MSE, then refit on all rows.

    Equal CV errors resolve toward the larger penalty. Folds standardise
    with their own training statistics.
    """
    X, y = check_xy(X, y)
    n, p = X.shape
    if n < 2:
        raise SingularInput(f"lasso needs at least 2 rows, got {n}")
    if n < params.cv_folds:
        raise InsufficientData(f"{n} rows cannot fill {params.cv_folds} folds")
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(p))
    std = Standardizer.fit(X, names)
    Xs = std.transform(X)
    ybar = float(np.mean(y))
    yc = y - ybar

    if params.lambda_grid is None:
        grid = default_grid(lambda_max(Xs, yc), params.n_lambdas, params.lambda_ratio)
    else:
        grid = params.lambda_grid
    grid = _dedupe_descending(grid)

    fold_mse = []
    for train, test in train_test_pairs(kfold_indices(n, params.cv_folds, seed)):
        fstd = Standardizer.fit(X[train], names)
        fy = y[train].mean()
        betas = lasso_path(fstd.transform(X[train]), y[train] - fy, grid, params.max_iter, params.tol)
        pred = fy + fstd.transform(X[test]) @ betas.T  # (n_test, n_grid)
        fold_mse.append(np.mean((y[test][:, None] - pred) ** 2, axis=0))
    cv_mse = np.mean(fold_mse, axis=0)
    best = int(np.argmin(cv_mse))  # first minimum = largest penalty

    beta = lasso_path(Xs, yc, grid[: best + 1], params.max_iter, params.tol)[-1]
    payload = LassoPayload(beta, ybar, float(grid[best]), grid, cv_mse, p)
    hp = asdict(params)
    if hp["lambda_grid"] is not None:
        hp["lambda_grid"] = list(hp["lambda_grid"])
    return TrainedModel(ModelType.LASSO_CV, names, std, payload, int(seed), hyperparams={"lasso": hp})
