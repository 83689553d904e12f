import numpy as np
import pytest

from leafwater.errors import EmptyInput, InvalidConfig, NonFiniteTarget
from leafwater.learners import GbmParams, fit_gbm, predict, staged_predict

STEP_X = np.array([[0.0], [1.0], [2.0], [3.0]])
STEP_Y = np.array([0.0, 0.0, 1.0, 1.0])


def test_constant_target():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 3))
    model = fit_gbm(X, np.full(30, 0.81), GbmParams(n_trees=20))
    assert np.all(predict(model, rng.normal(size=(50, 3)) * 10) == 0.81)


def test_single_stump_fits_step():
    model = fit_gbm(STEP_X, STEP_Y, GbmParams(n_trees=1, learning_rate=1.0, max_depth=1, min_samples_leaf=1))
    assert model.payload.init == 0.5
    tree = model.payload.trees[0]
    assert tree.threshold[0] == 1.5 and tree.value[1:].tolist() == [-0.5, 0.5]
    assert np.mean((predict(model, STEP_X) - STEP_Y) ** 2) == 0.0


def test_zero_trees_predicts_mean():
    rng = np.random.default_rng(1)
    X, y = rng.normal(size=(25, 2)), rng.normal(size=25)
    model = fit_gbm(X, y, GbmParams(n_trees=0))
    assert np.allclose(predict(model, rng.normal(size=(7, 2))), y.mean(), rtol=0, atol=1e-15)


def test_training_mse_monotone_over_50_datasets():
    rng = np.random.default_rng(3)
    for case in range(50):
        n, p = int(rng.integers(5, 80)), int(rng.integers(1, 6))
        X = rng.normal(size=(n, p))
        y = np.sin(X[:, 0] * 2) + 0.3 * rng.normal(size=n)
        params = GbmParams(n_trees=30, learning_rate=float(rng.uniform(0.05, 1.0)),
                           max_depth=int(rng.integers(1, 4)), min_samples_leaf=int(rng.integers(1, 3)))
        mse = [np.mean((F - y) ** 2) for F in staged_predict(fit_gbm(X, y, params), X)]
        assert all(b <= a for a, b in zip(mse, mse[1:])), case


def test_staged_matches_predict():
    rng = np.random.default_rng(4)
    X, y = rng.normal(size=(40, 3)), rng.normal(size=40)
    model = fit_gbm(X, y, GbmParams(n_trees=15))
    *_, last = staged_predict(model, X)
    assert np.array_equal(last, predict(model, X))


def test_guards():
    with pytest.raises(EmptyInput):
        fit_gbm(np.array([[1.0]]), np.array([1.0]))
    with pytest.raises(NonFiniteTarget):
        fit_gbm(np.array([[1.0], [2.0]]), np.array([1.0, np.nan]))
    with pytest.raises(InvalidConfig):
        GbmParams(learning_rate=0.0)
    with pytest.raises(InvalidConfig):
        GbmParams(learning_rate=1.5)
