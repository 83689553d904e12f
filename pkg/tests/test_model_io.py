import json

import numpy as np
import pytest

from leafwater.errors import CorruptPayload, DimensionMismatch, IoFailure, NonFiniteFeature, SchemaVersionMismatch
from leafwater.indices import BandConfig
from leafwater.learners import (
    ForestParams, GbmParams, HyperParams, LassoParams, ModelType, fit_model, load_model, model_from_json,
    model_to_json, predict, save_model,
)

FAST = HyperParams(gbm=GbmParams(30), lasso=LassoParams(n_lambdas=15), rf=ForestParams(20))


def _data(seed=0, n=50, p=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    return X, X @ rng.normal(size=p) + 0.2 * rng.normal(size=n)


@pytest.mark.parametrize("kind", list(ModelType))
def test_round_trip_bit_exact(tmp_path, kind):
    X, y = _data()
    model = fit_model(kind, X, y, FAST, seed=2**63 + 5, band_config=BandConfig(nir_nm=790.0))
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    Xq = np.random.default_rng(1).normal(size=(100, 3)) * 3
    assert np.array_equal(predict(back, Xq), predict(model, Xq))
    assert back.seed == 2**63 + 5 and back.band_config == BandConfig(nir_nm=790.0)
    assert model_to_json(back) == model_to_json(model)


def test_schema_keys():
    X, y = _data()
    doc = json.loads(model_to_json(fit_model("gbm", X, y, FAST)))
    assert {"schema_version", "model_type", "seed", "feature_names", "standardizer", "payload"} <= doc.keys()
    tree = doc["payload"]["trees"][0]
    assert set(tree) >= {"feature", "threshold", "left", "right", "value"}
    leaf = tree["feature"].index(-1)
    assert tree["left"][leaf] == tree["right"][leaf] == -1


def _doc():
    X, y = _data()
    return json.loads(model_to_json(fit_model("gbm", X, y, FAST)))


def test_unknown_model_type():
    doc = _doc()
    doc["model_type"] = "svm"
    with pytest.raises(CorruptPayload):
        model_from_json(json.dumps(doc))


def test_feature_names_length_mismatch():
    doc = _doc()
    doc["feature_names"].append("extra")
    with pytest.raises(CorruptPayload):
        model_from_json(json.dumps(doc))


def test_tree_feature_out_of_range():
    doc = _doc()
    tree = doc["payload"]["trees"][0]
    tree["feature"][0] = 7
    with pytest.raises(CorruptPayload):
        model_from_json(json.dumps(doc))


def test_schema_version_and_garbage():
    doc = _doc()
    doc["schema_version"] = 99
    with pytest.raises(SchemaVersionMismatch):
        model_from_json(json.dumps(doc))
    with pytest.raises(CorruptPayload):
        model_from_json("{not json")
    with pytest.raises(CorruptPayload):
        model_from_json("[1, 2]")


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load_model(tmp_path / "nope.json")


def test_predict_guards_and_purity():
    X, y = _data()
    model = fit_model("rf", X, y, FAST)
    before = model_to_json(model)
    with pytest.raises(DimensionMismatch):
        predict(model, np.zeros((2, 4)))
    with pytest.raises(NonFiniteFeature):
        predict(model, np.array([[np.nan, 0.0, 0.0]]))
    Xq = np.random.default_rng(3).normal(size=(10, 3))
    Xcopy = Xq.copy()
    predict(model, Xq)
    assert np.array_equal(Xq, Xcopy) and model_to_json(model) == before


def test_lasso_zero_coefficients_predict_intercept():
    X, y = _data()
    model = fit_model("lasso", X, y, HyperParams(lasso=LassoParams(lambda_grid=(1e3,))))
    assert np.all(predict(model, np.random.default_rng(4).normal(size=(9, 3))) == model.payload.intercept)
