"""Regressors for leaf water content: GBM, lasso-CV, random forest, stacking."""

from __future__ import annotations

from typing import Optional, Sequence

from .cv import derive_seed, kfold_indices
from .forest import fit_random_forest
from .gbm import fit_gbm, staged_predict
from .lasso import coordinate_descent, fit_lasso_cv, lambda_max, lasso_objective
from .model import (
    ModelType,
    Standardizer,
    TrainedModel,
    load_model,
    model_from_json,
    model_to_json,
    predict,
    save_model,
)
from .params import ForestParams, GbmParams, HyperParams, LassoParams, StackParams, TreeParams
from .stacking import fit_stacked
from .tree import RegressionTree, fit_tree


def fit_model(model_type, X, y, hp: HyperParams = HyperParams(), seed: int = 0,
              feature_names: Optional[Sequence[str]] = None, band_config=None) -> TrainedModel:
    """Fit any of the four model types; ``band_config`` is recorded for inference."""
    kind = ModelType.parse(model_type)
    if kind is ModelType.GBM:
        model = fit_gbm(X, y, hp.gbm, seed, feature_names)
    elif kind is ModelType.LASSO_CV:
        model = fit_lasso_cv(X, y, hp.lasso, seed, feature_names)
    elif kind is ModelType.RANDOM_FOREST:
        model = fit_random_forest(X, y, hp.rf, seed, feature_names)
    else:
        model = fit_stacked(X, y, hp, seed, feature_names)
    if band_config is not None:
        object.__setattr__(model, "band_config", band_config)
    return model


__all__ = [
    "ForestParams", "GbmParams", "HyperParams", "LassoParams", "ModelType", "RegressionTree",
    "StackParams", "Standardizer", "TrainedModel", "TreeParams", "coordinate_descent",
    "derive_seed", "fit_gbm", "fit_lasso_cv", "fit_model", "fit_random_forest", "fit_stacked",
    "fit_tree", "kfold_indices", "lambda_max", "lasso_objective", "load_model", "model_from_json",
    "model_to_json", "predict", "save_model", "staged_predict",
]
