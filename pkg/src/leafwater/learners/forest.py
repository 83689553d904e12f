"""Random forest regression: bootstrap rows, random feature subset per split."""

from __future__ import annotations

from dataclasses import asdict
from typing import Optional, Sequence

import numpy as np

from .model import ForestPayload, ModelType, Standardizer, TrainedModel
from .params import ForestParams, TreeParams
from .tree import check_xy, fit_tree


def fit_random_forest(X, y, params: ForestParams = ForestParams(), seed: int = 0,
                      feature_names: Optional[Sequence[str]] = None) -> TrainedModel:
    X, y = check_xy(X, y)
    n, p = X.shape
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(p))
    std = Standardizer.fit(X, names) if n > 1 else Standardizer(X[0] * 0.0, np.ones(p))
    mtry = params.resolved_mtry(p)
    tree_params = TreeParams(params.max_depth, params.min_samples_leaf)

    rng = np.random.default_rng(seed)
    trees, seeds = [], []
    for _ in range(params.n_trees):
        rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        tseed = int(rng.integers(0, 2**63))
        trees.append(fit_tree(X, y, tree_params, sample_idx=rows, mtry=mtry, seed=tseed))
        seeds.append(tseed)

    payload = ForestPayload(tuple(trees), mtry, params.bootstrap, tuple(seeds), p)
    return TrainedModel(ModelType.RANDOM_FOREST, names, std, payload, int(seed),
                        hyperparams={"rf": asdict(params)})
