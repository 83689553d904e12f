import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leafwater.errors import CorruptPayload, EmptyInput, NonFiniteFeature, NonFiniteTarget
from leafwater.learners import RegressionTree, TreeParams, fit_tree

from oracles import brute_force_tree, flatten_preorder, tree_predict


def _nodes(tree):
    return [(int(f), float(t) if f >= 0 else 0.0, float(v), int(n))
            for f, t, v, n in zip(tree.feature, tree.threshold, tree.value, tree.n_samples)]


def _random_instance(rng):
    n = int(rng.integers(1, 31))
    p = int(rng.integers(1, 5))
    if rng.random() < 0.5:  # coarse grid values force duplicate values and tied splits
        X = rng.integers(0, 4, size=(n, p)).astype(float)
        y = rng.integers(0, 3, size=n).astype(float)
    else:
        X = rng.normal(size=(n, p))
        y = X[:, 0] + rng.normal(size=n)
    depth = [None, 1, 2, 3][int(rng.integers(0, 4))]
    leaf = int(rng.integers(1, 4))
    return X, y, depth, leaf


def test_matches_brute_force_on_200_instances():
    rng = np.random.default_rng(2024)
    for case in range(200):
        X, y, depth, leaf = _random_instance(rng)
        tree = fit_tree(X, y, TreeParams(depth, leaf))
        oracle = brute_force_tree(X.tolist(), y.tolist(), max_depth=depth, min_leaf=leaf)
        want = flatten_preorder(oracle)
        got = _nodes(tree)
        assert [g[0] for g in got] == [w[0] for w in want], case
        assert [g[3] for g in got] == [w[3] for w in want], case
        np.testing.assert_array_equal([g[1] for g in got], [w[1] for w in want])
        np.testing.assert_allclose([g[2] for g in got], [w[2] for w in want], rtol=0, atol=1e-12)
        Xq = rng.normal(size=(20, X.shape[1])) * 2
        np.testing.assert_allclose(tree.predict(Xq), [tree_predict(oracle, x) for x in Xq.tolist()],
                                   rtol=0, atol=1e-12)


def test_constant_target_single_leaf():
    X = np.arange(10.0).reshape(-1, 1)
    tree = fit_tree(X, np.full(10, 0.37))
    assert tree.n_nodes == 1 and tree.value[0] == 0.37
    assert np.all(tree.predict(X) == 0.37)


def test_step_split_at_midpoint():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    tree = fit_tree(X, np.array([0.0, 0.0, 1.0, 1.0]), TreeParams(max_depth=1))
    assert tree.feature.tolist() == [0, -1, -1]
    assert tree.threshold[0] == 1.5
    assert tree.value[1:].tolist() == [0.0, 1.0]


def test_single_row():
    tree = fit_tree(np.array([[4.0, 2.0]]), np.array([0.6]))
    assert tree.n_nodes == 1 and tree.predict(np.zeros((3, 2))).tolist() == [0.6] * 3


def test_memorises_distinct_rows():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 3))
    y = rng.normal(size=60)
    tree = fit_tree(X, y, TreeParams(None, 1))
    assert np.array_equal(tree.predict(X), y)


def test_input_errors():
    with pytest.raises(EmptyInput):
        fit_tree(np.empty((0, 2)), np.empty(0))
    with pytest.raises(NonFiniteFeature):
        fit_tree(np.array([[np.nan]]), np.array([1.0]))
    with pytest.raises(NonFiniteTarget):
        fit_tree(np.array([[1.0]]), np.array([np.inf]))


def test_corrupt_node_arrays():
    with pytest.raises(CorruptPayload):
        RegressionTree([0, -1, -1], [0.5, 0, 0], [1, -1, -1], [5, -1, -1], [0, 0, 0], [2, 1, 1])
    with pytest.raises(CorruptPayload):
        RegressionTree([-1], [0.0], [3], [-1], [0.0], [1])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([None, 1, 2, 4]), st.integers(1, 5))
def test_structural_invariants(seed, depth, leaf):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 80))
    X = rng.normal(size=(n, 3))
    y = rng.normal(size=n)
    tree = fit_tree(X, y, TreeParams(depth, leaf))
    if depth is not None:
        assert tree.depth() <= depth
    leaves = tree.feature < 0
    assert np.all(tree.n_samples[leaves] >= min(leaf, n))
    assert tree.n_samples[leaves].sum() == n
    # each leaf value is the mean of the targets routed to it
    node_of = np.zeros(n, dtype=int)
    for i, x in enumerate(X):
        k = 0
        while tree.feature[k] >= 0:
            k = tree.left[k] if x[tree.feature[k]] <= tree.threshold[k] else tree.right[k]
        node_of[i] = k
    for k in np.flatnonzero(leaves):
        assert tree.value[k] == pytest.approx(y[node_of == k].mean(), abs=1e-12)


def test_bootstrap_rows_and_feature_subsets_reproducible():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(50, 6))
    y = rng.normal(size=50)
    idx = rng.integers(0, 50, 50)
    a = fit_tree(X, y, sample_idx=idx, mtry=2, seed=123)
    b = fit_tree(X, y, sample_idx=idx, mtry=2, seed=123)
    assert a.to_dict() == b.to_dict()
    assert a.n_samples[0] == 50
