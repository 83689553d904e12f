"""CART regression trees stored as flat node arrays."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import kernels
from ..errors import CorruptPayload, EmptyInput, NonFiniteFeature, NonFiniteTarget
from .params import TreeParams


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """Pre-order node arrays; leaves carry ``feature == left == right == -1``.

    ``value`` holds the mean training target of every node (internal nodes
    included), so a leaf's value is its prediction.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1

    def __post_init__(self):
        for name, dtype in (("feature", np.int64), ("threshold", np.float64), ("left", np.int64),
                            ("right", np.int64), ("value", np.float64), ("n_samples", np.int64)):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype))
        sizes = {a.shape for a in (self.feature, self.threshold, self.left, self.right,
                                   self.value, self.n_samples)}
        if len(sizes) != 1 or self.feature.ndim != 1 or self.feature.size == 0:
            raise CorruptPayload("tree node arrays must be non-empty and equally sized")
        n = self.feature.size
        internal = self.feature >= 0
        children = np.concatenate([self.left[internal], self.right[internal]])
        if np.any(children <= 0) or np.any(children >= n):
            raise CorruptPayload("tree child index out of range")
        if np.any(self.left[~internal] != -1) or np.any(self.right[~internal] != -1):
            raise CorruptPayload("leaf nodes must use -1 child sentinels")

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):  # pre-order: parents precede children
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def max_feature_index(self) -> int:
        return int(self.feature.max())

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return kernels.predict_ensemble(X, self.feature, self.threshold, self.left, self.right,
                                        self.value, np.zeros(1, dtype=np.int64), 0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, max_depth=None, min_samples_leaf=1) -> "RegressionTree":
        try:
            return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"],
                       d.get("n_samples", [0] * len(d["feature"])), max_depth, min_samples_leaf)
        except (KeyError, TypeError) as exc:
            raise CorruptPayload(f"malformed tree: {exc}") from exc


class PackedForest:
    """Trees concatenated into one node table for single-call prediction."""

    def __init__(self, trees: Sequence[RegressionTree]):
        self.trees = tuple(trees)
        offsets = np.cumsum([0] + [t.n_nodes for t in self.trees])
        self.roots = offsets[:-1].astype(np.int64)
        if self.trees:
            shift = np.repeat(offsets[:-1], [t.n_nodes for t in self.trees])
            self.feature = np.concatenate([t.feature for t in self.trees])
            self.threshold = np.concatenate([t.threshold for t in self.trees])
            self.value = np.concatenate([t.value for t in self.trees])
            left = np.concatenate([t.left for t in self.trees])
            right = np.concatenate([t.right for t in self.trees])
            self.left = np.where(left >= 0, left + shift, -1)
            self.right = np.where(right >= 0, right + shift, -1)
        else:
            self.feature = np.full(1, -1, dtype=np.int64)
            self.threshold = np.zeros(1)
            self.value = np.zeros(1)
            self.left = self.right = np.full(1, -1, dtype=np.int64)
        for a in (self.roots, self.feature, self.threshold, self.value, self.left, self.right):
            a.setflags(write=False)
        self._shifted = None

    def __len__(self):
        return len(self.trees)

    def predict(self, X, init: float, scale: float) -> np.ndarray:
        return kernels.predict_ensemble(X, self.feature, self.threshold, self.left, self.right,
                                        self.value, self.roots, init, scale)

    def mean_predict(self, X) -> np.ndarray:
        """Average of the trees, summed as offsets from the first root value
        so that identical trees average back exactly."""
        if len(self.trees) <= 1:
            return self.predict(X, 0.0, 1.0)
        ref = float(self.value[self.roots[0]])
        if getattr(self, "_shifted", None) is None:
            self._shifted = self.value - ref
        return kernels.predict_ensemble(X, self.feature, self.threshold, self.left, self.right,
                                        self._shifted, self.roots, ref, 1.0 / len(self.trees))


def check_xy(X, y=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise EmptyInput(f"need a non-empty 2-D feature matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("feature matrix contains non-finite values")
    if y is None:
        return X
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise EmptyInput(f"target shape {y.shape} does not match {X.shape[0]} rows")
    if not np.all(np.isfinite(y)):
        raise NonFiniteTarget("target contains non-finite values")
    return X, y


def fit_tree(X, y, params: TreeParams = TreeParams(), *, sample_idx=None,
             mtry: Optional[int] = None, seed: int = 0) -> RegressionTree:
    """Greedy CART on squared error.

    Candidate thresholds are midpoints between consecutive distinct values; a
    split needs ``min_samples_leaf`` rows on each side and a strict SSE
    decrease. Splits whose SSE is within ``1e-12 * sum(y**2)`` of the best
    count as ties and go to the lowest (feature, threshold). ``sample_idx``
    may repeat rows (bootstrap); ``mtry`` < p draws a feature subset per node.
    """
    X, y = check_xy(X, y)
    p = X.shape[1]
    idx = np.arange(X.shape[0], dtype=np.int64) if sample_idx is None else np.asarray(sample_idx, dtype=np.int64)
    if idx.size == 0:
        raise EmptyInput("no rows to grow a tree on")
    mtry = p if mtry is None else int(mtry)
    max_depth = -1 if params.max_depth is None else int(params.max_depth)
    arrays = kernels.build_tree(X, y, idx, max_depth, int(params.min_samples_leaf), mtry, int(seed))
    return RegressionTree(*arrays, max_depth=params.max_depth, min_samples_leaf=params.min_samples_leaf)
