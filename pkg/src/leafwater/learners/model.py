"""Fitted-model container, prediction and the JSON model file."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..errors import (
    ConstantFeature,
    CorruptPayload,
    DimensionMismatch,
    IoFailure,
    NonFiniteFeature,
    SchemaVersionMismatch,
)
from ..indices import BandConfig
from .tree import PackedForest, RegressionTree

SCHEMA_VERSION = 1


class ModelType(enum.Enum):
    GBM = "GBM"
    LASSO_CV = "LASSO_CV"
    RANDOM_FOREST = "RANDOM_FOREST"
    STACKED = "STACKED"

    @classmethod
    def parse(cls, value) -> "ModelType":
        aliases = {"gbm": cls.GBM, "lasso": cls.LASSO_CV, "lasso_cv": cls.LASSO_CV,
                   "rf": cls.RANDOM_FOREST, "random_forest": cls.RANDOM_FOREST,
                   "stacked": cls.STACKED}
        if isinstance(value, cls):
            return value
        key = str(value)
        if key in cls.__members__:
            return cls[key]
        if key.lower() in aliases:
            return aliases[key.lower()]
        raise CorruptPayload(f"unknown model_type {value!r}")


def _ro(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", _ro(self.means))
        object.__setattr__(self, "stds", _ro(self.stds))
        if self.means.shape != self.stds.shape or self.means.ndim != 1:
            raise CorruptPayload("standardizer means/stds shapes differ")
        if not np.all(self.stds > 0):
            raise ConstantFeature("standardizer stds must be positive")

    @classmethod
    def fit(cls, X: np.ndarray, feature_names=None) -> "Standardizer":
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        const = ~(stds > 0)
        if const.any():
            j = int(np.argmax(const))
            name = feature_names[j] if feature_names is not None else j
            raise ConstantFeature(f"feature {name!r} is constant", feature=name)
        return cls(means, stds)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.means) / self.stds

    def __len__(self):
        return int(self.means.size)


@dataclass(frozen=True, eq=False)
class GbmPayload:
    init: float
    learning_rate: float
    trees: tuple
    n_features: int

    @property
    def forest(self) -> PackedForest:
        f = self.__dict__.get("_forest")
        if f is None:
            f = PackedForest(self.trees)
            object.__setattr__(self, "_forest", f)
        return f

    def predict(self, X):
        return self.forest.predict(X, self.init, self.learning_rate)


@dataclass(frozen=True, eq=False)
class LassoPayload:
    """Coefficients on standardised features; ``intercept`` is the target mean."""

    coef_std: np.ndarray
    intercept: float
    lam: float
    lambda_grid: np.ndarray
    cv_mse: np.ndarray
    n_features: int

    def __post_init__(self):
        for name in ("coef_std", "lambda_grid", "cv_mse"):
            object.__setattr__(self, name, _ro(getattr(self, name)))


@dataclass(frozen=True, eq=False)
class ForestPayload:
    """Per-split feature subsets come from ``tree_seeds`` (one per tree) and ``mtry``."""

    trees: tuple
    mtry: int
    bootstrap: bool
    tree_seeds: tuple
    n_features: int

    @property
    def forest(self) -> PackedForest:
        f = self.__dict__.get("_forest")
        if f is None:
            f = PackedForest(self.trees)
            object.__setattr__(self, "_forest", f)
        return f

    def predict(self, X):
        return self.forest.mean_predict(X)


@dataclass(frozen=True, eq=False)
class StackedPayload:
    base_models: tuple
    meta_coef: np.ndarray
    meta_intercept: float
    n_features: int

    def __post_init__(self):
        object.__setattr__(self, "meta_coef", _ro(self.meta_coef))


Payload = Union[GbmPayload, LassoPayload, ForestPayload, StackedPayload]


@dataclass(frozen=True, eq=False)
class TrainedModel:
    model_type: ModelType
    feature_names: tuple
    standardizer: Standardizer
    payload: Payload
    seed: int
    band_config: Optional[BandConfig] = None
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        _check_dimensions(self)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict(self, X) -> np.ndarray:
        return predict(self, X)

    # lasso coefficients in original feature units
    @property
    def coef_(self) -> np.ndarray:
        if self.model_type is not ModelType.LASSO_CV:
            raise AttributeError("coef_ is only defined for lasso models")
        return self.payload.coef_std / self.standardizer.stds

    @property
    def intercept_(self) -> float:
        if self.model_type is not ModelType.LASSO_CV:
            raise AttributeError("intercept_ is only defined for lasso models")
        return float(self.payload.intercept - np.dot(self.coef_, self.standardizer.means))


def _check_dimensions(model: TrainedModel) -> None:
    p = len(model.feature_names)
    pl = model.payload
    if len(model.standardizer) != p or pl.n_features != p:
        raise CorruptPayload(
            f"feature_names has {p} entries but payload/standardizer dimension differs"
        )
    if model.model_type in (ModelType.GBM, ModelType.RANDOM_FOREST):
        for t in pl.trees:
            if t.max_feature_index() >= p:
                raise CorruptPayload("tree references a feature beyond feature_names")
    elif model.model_type is ModelType.LASSO_CV:
        if pl.coef_std.shape != (p,):
            raise CorruptPayload("lasso coefficient count differs from feature_names")
    elif model.model_type is ModelType.STACKED:
        if pl.meta_coef.shape != (len(pl.base_models),):
            raise CorruptPayload("meta coefficient count differs from base model count")
        for b in pl.base_models:
            if b.feature_names != model.feature_names:
                raise CorruptPayload("stacked base model feature names differ")


def predict(model: TrainedModel, X) -> np.ndarray:
    """Predictions for the rows of ``X``; never mutates ``model``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"model expects {model.n_features} features, got array of shape {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("prediction input contains non-finite values")
    return _predict_unchecked(model, X)


def _predict_unchecked(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    pl = model.payload
    if model.model_type is ModelType.LASSO_CV:
        return pl.intercept + model.standardizer.transform(X) @ pl.coef_std
    if model.model_type is ModelType.STACKED:
        base = np.column_stack([_predict_unchecked(b, X) for b in pl.base_models])
        return pl.meta_intercept + base @ pl.meta_coef
    return pl.predict(X)


# --------------------------------------------------------------------------
# serialisation

def _model_to_dict(model: TrainedModel) -> dict:
    pl = model.payload
    if model.model_type is ModelType.GBM:
        payload = {"init": pl.init, "learning_rate": pl.learning_rate, "n_features": pl.n_features,
                   "trees": [t.to_dict() for t in pl.trees]}
    elif model.model_type is ModelType.RANDOM_FOREST:
        payload = {"mtry": pl.mtry, "bootstrap": pl.bootstrap, "n_features": pl.n_features,
                   "tree_seeds": [str(s) for s in pl.tree_seeds],
                   "trees": [t.to_dict() for t in pl.trees]}
    elif model.model_type is ModelType.LASSO_CV:
        payload = {"coef_std": pl.coef_std.tolist(), "intercept": pl.intercept, "lambda": pl.lam,
                   "lambda_grid": pl.lambda_grid.tolist(), "cv_mse": pl.cv_mse.tolist(),
                   "n_features": pl.n_features,
                   "coef": model.coef_.tolist(), "intercept_original": model.intercept_}
    else:
        payload = {"meta_coef": pl.meta_coef.tolist(), "meta_intercept": pl.meta_intercept,
                   "n_features": pl.n_features,
                   "base_models": [_model_to_dict(b) for b in pl.base_models]}
    return {
        "schema_version": SCHEMA_VERSION,
        "model_type": model.model_type.value,
        "seed": str(model.seed),
        "feature_names": list(model.feature_names),
        "standardizer": {"means": model.standardizer.means.tolist(),
                         "stds": model.standardizer.stds.tolist()},
        "band_config": None if model.band_config is None else model.band_config.to_dict(),
        "hyperparams": model.hyperparams,
        "payload": payload,
    }


def _model_from_dict(d: dict) -> TrainedModel:
    if not isinstance(d, dict):
        raise CorruptPayload("model document must be a JSON object")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"unsupported schema_version {d.get('schema_version')!r} (expected {SCHEMA_VERSION})"
        )
    try:
        mtype = ModelType(d["model_type"])
    except (KeyError, ValueError):
        raise CorruptPayload(f"unknown model_type {d.get('model_type')!r}") from None
    try:
        pl = d["payload"]
        std = Standardizer(d["standardizer"]["means"], d["standardizer"]["stds"])
        hp = d.get("hyperparams") or {}
        if mtype is ModelType.GBM:
            gp = hp.get("gbm", {})
            trees = tuple(RegressionTree.from_dict(t, gp.get("max_depth"), gp.get("min_samples_leaf", 1))
                          for t in pl["trees"])
            payload = GbmPayload(float(pl["init"]), float(pl["learning_rate"]), trees, int(pl["n_features"]))
        elif mtype is ModelType.RANDOM_FOREST:
            rp = hp.get("rf", {})
            trees = tuple(RegressionTree.from_dict(t, rp.get("max_depth"), rp.get("min_samples_leaf", 1))
                          for t in pl["trees"])
            if not trees:
                raise CorruptPayload("random forest without trees")
            payload = ForestPayload(trees, int(pl["mtry"]), bool(pl["bootstrap"]),
                                    tuple(int(s) for s in pl["tree_seeds"]), int(pl["n_features"]))
        elif mtype is ModelType.LASSO_CV:
            payload = LassoPayload(pl["coef_std"], float(pl["intercept"]), float(pl["lambda"]),
                                   pl["lambda_grid"], pl["cv_mse"], int(pl["n_features"]))
        else:
            payload = StackedPayload(tuple(_model_from_dict(b) for b in pl["base_models"]),
                                     pl["meta_coef"], float(pl["meta_intercept"]), int(pl["n_features"]))
        band = d.get("band_config")
        return TrainedModel(
            model_type=mtype,
            feature_names=tuple(d["feature_names"]),
            standardizer=std,
            payload=payload,
            seed=int(d["seed"]),
            band_config=None if band is None else BandConfig(**band),
            hyperparams=hp,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (CorruptPayload, SchemaVersionMismatch)):
            raise
        raise CorruptPayload(f"malformed model payload: {exc!r}") from exc


def model_to_json(model: TrainedModel) -> str:
    return json.dumps(_model_to_dict(model), indent=1, allow_nan=False)


def model_from_json(text: str) -> TrainedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptPayload(f"model file is not valid JSON: {exc}") from exc
    return _model_from_dict(doc)


def save_model(model: TrainedModel, path) -> Path:
    path = Path(path)
    try:
        path.write_text(model_to_json(model) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write model {path}: {exc}") from exc
    return path


def load_model(path) -> TrainedModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read model {path}: {exc}") from exc
    return model_from_json(text)
