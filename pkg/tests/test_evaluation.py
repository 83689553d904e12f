import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leafwater.errors import InsufficientData, LengthMismatch, ZeroVariance
from leafwater.evaluation import (
    ALGORITHMS, FEATURE_SET_ORDER, Protocol, pearson_correlation_matrix, r_squared, rmse, run_table2_experiment,
)
from leafwater.learners import ForestParams, GbmParams, HyperParams, LassoParams, StackParams

from oracles import pearson

FAST = HyperParams(gbm=GbmParams(20), lasso=LassoParams(n_lambdas=10), rf=ForestParams(10), stack=StackParams(3))
finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_rmse_examples():
    assert rmse([0.2, 0.5], [0.2, 0.5]) == 0.0
    assert rmse([0, 1], [1, 1]) == pytest.approx(0.7071067811865476, abs=1e-15)
    assert rmse([0, 0, 0], [1, 1, 1]) == 1.0


def test_r2_examples():
    y = np.array([0.1, 0.4, 0.9])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full(3, y.mean())) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ZeroVariance):
        r_squared([0.5, 0.5], [0.4, 0.6])
    with pytest.raises(LengthMismatch):
        rmse([1, 2], [1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=30))
def test_rmse_squared_times_n_is_sse(pairs):
    y, yh = map(np.array, zip(*pairs))
    sse = float(np.sum((y - yh) ** 2))
    assert rmse(y, yh) ** 2 * len(y) == pytest.approx(sse, rel=1e-12, abs=1e-12)
    assert rmse(y, yh) >= 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=2, max_size=30), st.floats(-100, 100))
def test_r2_shift_invariant(pairs, c):
    y, yh = map(np.array, zip(*pairs))
    if np.ptp(y) < 1e-3:
        return
    assert r_squared(y + c, yh + c) == pytest.approx(r_squared(y, yh), rel=1e-9, abs=1e-9)
    assert r_squared(y, yh) <= 1.0


def test_pearson_examples():
    x = np.array([1.0, 2.0, 3.0])
    R = pearson_correlation_matrix(np.column_stack([x, x, -x, [2.0, 4.0, 6.1]]))
    assert np.all(np.diag(R) == 1.0)
    assert R[0, 1] == pytest.approx(1.0, abs=1e-15) and R[0, 2] == pytest.approx(-1.0, abs=1e-15)
    want = pearson([1, 2, 3], [2, 4, 6.1])
    assert abs(R[0, 3] - want) < 1e-12
    assert abs(want - 0.9999008674099175) < 1e-15  # cov 4.1 / (sqrt(2) * sqrt(8.40667))


def test_pearson_constant_column():
    with pytest.raises(ZeroVariance):
        pearson_correlation_matrix(np.column_stack([np.arange(4.0), np.ones(4)]), ["a", "b"])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 40), st.integers(1, 12))
def test_correlation_symmetric_psd(seed, n, k):
    A = np.random.default_rng(seed).normal(size=(n, k))
    R = pearson_correlation_matrix(A)
    assert np.array_equal(R, R.T)
    assert np.linalg.eigvalsh(R).min() >= -1e-9


def test_experiment_shape_and_determinism(small_samples):
    samples, axis = small_samples
    a = run_table2_experiment(samples, axis, hyperparams=FAST, protocol=Protocol(folds=3, seed=5))
    b = run_table2_experiment(samples, axis, hyperparams=FAST, protocol=Protocol(folds=3, seed=5))
    assert len(a.cells) == 12 and set(a.cells) == {(m, f) for m in ALGORITHMS for f in FEATURE_SET_ORDER}
    assert a.to_csv() == b.to_csv() and a.to_table() == b.to_table()
    for cell in a.cells.values():
        assert cell.rmse >= 0 and cell.r2 <= 1
        fold_mse = np.array(cell.fold_rmse) ** 2
        assert cell.rmse == pytest.approx(math.sqrt(fold_mse.mean()), rel=1e-12)
    assert sorted(np.bincount(a.fold_ids).tolist()) == [40, 40, 40]
    table = a.to_table()
    assert "8 Indices" in table and "3 Indices" in table and "11 Indices" in table
    assert a.to_csv().count("\n") == 13


def test_holdout_protocol(small_samples):
    samples, axis = small_samples
    rep = run_table2_experiment(samples, axis, hyperparams=FAST, protocol=Protocol(seed=1, test_fraction=0.25),
                                algorithms=["gbm"], feature_sets=["three"])
    assert (rep.fold_ids == 0).sum() == 30 and (rep.fold_ids == -1).sum() == 90


def test_too_few_samples(small_samples):
    samples, axis = small_samples
    with pytest.raises(InsufficientData):
        run_table2_experiment(samples[:10], axis, hyperparams=FAST)


def test_unlabeled_rows_are_skipped(small_samples):
    from dataclasses import replace
    samples, axis = small_samples
    mixed = [replace(s, lwc=None) if i % 4 == 0 else s for i, s in enumerate(samples)]
    rep = run_table2_experiment(mixed, axis, hyperparams=FAST, protocol=Protocol(folds=3),
                                algorithms=["lasso"], feature_sets=["three"])
    assert rep.n_samples == 90
