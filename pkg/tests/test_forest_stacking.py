import numpy as np
import pytest

from leafwater.errors import InsufficientData
from leafwater.evaluation import r_squared
from leafwater.learners import (
    ForestParams, GbmParams, HyperParams, LassoParams, StackParams, TreeParams, fit_random_forest,
    fit_stacked, fit_tree, model_to_json, predict,
)
from leafwater.learners.stacking import fit_meta


def _data(seed, n=60, p=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    return X, X[:, 0] - X[:, 1] ** 2 + 0.1 * rng.normal(size=n)


def test_single_unbootstrapped_tree_equals_fit_tree():
    X, y = _data(0)
    Xq = np.random.default_rng(1).normal(size=(100, 4))
    for depth, leaf in [(None, 1), (3, 2), (1, 5)]:
        forest = fit_random_forest(X, y, ForestParams(1, mtry=4, bootstrap=False, max_depth=depth,
                                                      min_samples_leaf=leaf), seed=9)
        tree = fit_tree(X, y, TreeParams(depth, leaf))
        assert np.array_equal(predict(forest, Xq), tree.predict(Xq))


def test_same_seed_same_payload():
    X, y = _data(2)
    a = fit_random_forest(X, y, ForestParams(25), seed=77)
    b = fit_random_forest(X, y, ForestParams(25), seed=77)
    assert model_to_json(a) == model_to_json(b)
    assert model_to_json(a) != model_to_json(fit_random_forest(X, y, ForestParams(25), seed=78))


def test_seed_invariance_without_randomness():
    X, y = _data(3)
    params = ForestParams(5, mtry=4, bootstrap=False)
    Xq = np.random.default_rng(4).normal(size=(30, 4))
    ref = predict(fit_random_forest(X, y, params, seed=0), Xq)
    for seed in (1, 2**40, 12345):
        assert np.array_equal(predict(fit_random_forest(X, y, params, seed=seed), Xq), ref)


@pytest.mark.parametrize("trees,seed", [(1, 0), (7, 3), (40, 99)])
def test_constant_target_forest(trees, seed):
    X, _ = _data(5)
    model = fit_random_forest(X, np.full(60, 0.64), ForestParams(trees), seed=seed)
    assert np.all(predict(model, np.random.default_rng(6).normal(size=(20, 4))) == 0.64)


def test_default_mtry():
    assert ForestParams().resolved_mtry(11) == 3
    assert ForestParams().resolved_mtry(2) == 1


def test_meta_reproduces_perfect_bases():
    y = np.random.default_rng(7).normal(size=30)
    coef, intercept = fit_meta(np.column_stack([y, y, y]), y)
    assert np.allclose(intercept + np.column_stack([y, y, y]) @ coef, y, atol=1e-12)


def test_meta_with_constant_column():
    rng = np.random.default_rng(8)
    y = rng.normal(size=30)
    P = np.column_stack([y + 0.1 * rng.normal(size=30), np.full(30, 2.0), y])
    coef, intercept = fit_meta(P, y)
    assert np.all(np.isfinite(coef)) and np.isfinite(intercept)
    assert np.allclose(intercept + P @ coef, y, atol=1e-10)


FAST = HyperParams(gbm=GbmParams(40), lasso=LassoParams(n_lambdas=20), rf=ForestParams(30), stack=StackParams(5))


def test_stacked_in_sample_r2_not_below_weakest_base():
    X, y = _data(9, n=80)
    model = fit_stacked(X, y, FAST, seed=3)
    base_r2 = [r_squared(y, predict(b, X)) for b in model.payload.base_models]
    assert r_squared(y, predict(model, X)) >= min(base_r2)
    assert model.payload.meta_coef.shape == (3,)


def test_stacked_deterministic():
    X, y = _data(10, n=40)
    assert model_to_json(fit_stacked(X, y, FAST, seed=1)) == model_to_json(fit_stacked(X, y, FAST, seed=1))


def test_stacked_needs_enough_rows():
    X, y = _data(11, n=4)
    with pytest.raises(InsufficientData):
        fit_stacked(X, y, FAST)
