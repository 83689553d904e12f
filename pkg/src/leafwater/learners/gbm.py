"""Least-squares gradient boosting over CART trees."""

from __future__ import annotations

from dataclasses import asdict
from typing import Iterator, Optional, Sequence

import numpy as np

from ..errors import EmptyInput
from .model import GbmPayload, ModelType, Standardizer, TrainedModel
from .params import GbmParams, TreeParams
from .tree import check_xy, fit_tree


def fit_gbm(X, y, params: GbmParams = GbmParams(), seed: int = 0,
            feature_names: Optional[Sequence[str]] = None) -> TrainedModel:
    """Start from the target mean; each round fits a tree to the residuals
    and adds it scaled by the learning rate."""
    X, y = check_xy(X, y)
    n, p = X.shape
    if n < 2:
        raise EmptyInput(f"gradient boosting needs at least 2 rows, got {n}")
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(p))
    standardizer = Standardizer.fit(X, names)

    init = float(y[0] + np.mean(y - y[0]))  # exact for constant targets
    F = np.full(n, init)
    tree_params = TreeParams(params.max_depth, params.min_samples_leaf)
    trees = []
    for _ in range(params.n_trees):
        tree = fit_tree(X, y - F, tree_params)
        F = F + params.learning_rate * tree.predict(X)
        trees.append(tree)

    payload = GbmPayload(init, float(params.learning_rate), tuple(trees), p)
    return TrainedModel(ModelType.GBM, names, standardizer, payload, int(seed),
                        hyperparams={"gbm": asdict(params)})


def staged_predict(model: TrainedModel, X) -> Iterator[np.ndarray]:
    """Yield predictions after 0, 1, ..., M boosting rounds."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    pl = model.payload
    F = np.full(X.shape[0], pl.init)
    yield F.copy()
    for tree in pl.trees:
        F = F + pl.learning_rate * tree.predict(X)
        yield F.copy()

