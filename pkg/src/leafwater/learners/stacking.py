"""Stacked ensemble: OLS over out-of-fold predictions of GBM, lasso-CV and RF."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..errors import InsufficientData
from .cv import derive_seed, kfold_indices, train_test_pairs
from .forest import fit_random_forest
from .gbm import fit_gbm
from .lasso import fit_lasso_cv
from .model import ModelType, Standardizer, StackedPayload, TrainedModel, predict
from .params import HyperParams
from .tree import check_xy

BASE_ORDER = (ModelType.GBM, ModelType.LASSO_CV, ModelType.RANDOM_FOREST)


def _fit_base(kind: ModelType, X, y, hp: HyperParams, seed: int, names):
    if kind is ModelType.GBM:
        return fit_gbm(X, y, hp.gbm, seed, names)
    if kind is ModelType.LASSO_CV:
        return fit_lasso_cv(X, y, hp.lasso, seed, names)
    return fit_random_forest(X, y, hp.rf, seed, names)


def fit_meta(P: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Least squares with intercept; rank deficiency gets the minimum-norm solution."""
    A = np.column_stack([np.ones(P.shape[0]), P])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    return sol[1:], float(sol[0])


def out_of_fold_predictions(X, y, hp: HyperParams, seed: int, names) -> np.ndarray:
    n = X.shape[0]
    oof = np.empty((n, len(BASE_ORDER)))
    for f, (train, test) in enumerate(train_test_pairs(kfold_indices(n, hp.stack.cv_folds, seed))):
        for b, kind in enumerate(BASE_ORDER):
            model = _fit_base(kind, X[train], y[train], hp, derive_seed(seed, f, b), names)
            oof[test, b] = predict(model, X[test])
    return oof


def fit_stacked(X, y, hp: HyperParams = HyperParams(), seed: int = 0,
                feature_names: Optional[Sequence[str]] = None) -> TrainedModel:
    X, y = check_xy(X, y)
    n, p = X.shape
    if n < hp.stack.cv_folds:
        raise InsufficientData(f"{n} rows cannot fill {hp.stack.cv_folds} stacking folds")
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(p))
    std = Standardizer.fit(X, names)

    oof = out_of_fold_predictions(X, y, hp, seed, names)
    coef, intercept = fit_meta(oof, y)
    k = hp.stack.cv_folds
    bases = tuple(_fit_base(kind, X, y, hp, derive_seed(seed, k, b), names)
                  for b, kind in enumerate(BASE_ORDER))
    payload = StackedPayload(bases, coef, intercept, p)
    return TrainedModel(ModelType.STACKED, names, std, payload, int(seed),
                        hyperparams={"stack": {"cv_folds": k}})
