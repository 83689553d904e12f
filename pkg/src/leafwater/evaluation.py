"""Metrics, index correlation and the feature-set comparison experiment."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyInput, InsufficientData, LengthMismatch, MalformedValue, ZeroVariance
from .indices import BandConfig, FeatureSet, feature_matrix
from .learners import HyperParams, ModelType, derive_seed, fit_model, kfold_indices, predict
from .learners.cv import train_test_pairs
from .spectral_io import SpectralSample, WavelengthAxis

ALGORITHMS = (ModelType.GBM, ModelType.LASSO_CV, ModelType.RANDOM_FOREST, ModelType.STACKED)
ALGORITHM_LABELS = {
    ModelType.GBM: "Gradient Boost",
    ModelType.LASSO_CV: "Lasso Cross-Val",
    ModelType.RANDOM_FOREST: "Random Forest",
    ModelType.STACKED: "Stacked Methods",
}
# column-group order of the comparison report
FEATURE_SET_ORDER = (FeatureSet.EIGHT, FeatureSet.THREE, FeatureSet.ELEVEN)
MIN_LABELED_SAMPLES = 20


def _pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.size != y_hat.size:
        raise LengthMismatch(f"lengths differ: {y.size} vs {y_hat.size}")
    if y.size == 0:
        raise EmptyInput("metrics need at least one value")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(y_hat))):
        raise MalformedValue("metrics need finite values")
    return y, y_hat


def rmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def r_squared(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    if y.size < 2:
        raise ZeroVariance("R^2 needs at least two values")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if not ss_tot > 0:
        raise ZeroVariance("R^2 is undefined for a constant target")
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / ss_tot


def pearson_correlation_matrix(columns, names: Optional[Sequence[str]] = None) -> np.ndarray:
    """Pairwise Pearson r of the columns of ``columns`` (rows are observations)."""
    A = np.asarray(columns, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 2:
        raise InsufficientData("correlation needs a 2-D matrix with at least 2 rows")
    names = list(names) if names is not None else [str(j) for j in range(A.shape[1])]
    C = A - A.mean(axis=0)
    norms = np.sqrt(np.sum(C * C, axis=0))
    flat = ~(norms > 0)
    if flat.any():
        j = int(np.argmax(flat))
        raise ZeroVariance(f"column {names[j]!r} is constant", column=names[j])
    Z = C / norms
    R = Z.T @ Z
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    return np.clip(R, -1.0, 1.0)


@dataclass(frozen=True)
class Protocol:
    """``test_fraction`` None or 0 selects k-fold CV; otherwise one seeded holdout split."""

    folds: int = 5
    seed: int = 42
    test_fraction: Optional[float] = None

    def __post_init__(self):
        if self.test_fraction is not None and not 0.0 <= self.test_fraction < 1.0:
            raise MalformedValue(f"test_fraction must lie in [0, 1), got {self.test_fraction}")
        if self.folds < 2 and not self.test_fraction:
            raise InsufficientData(f"need at least 2 folds, got {self.folds}")

    def splits(self, n: int) -> list[tuple[np.ndarray, np.ndarray]]:
        if self.test_fraction:
            perm = np.random.default_rng(self.seed).permutation(n)
            n_test = min(n - 1, max(1, int(round(self.test_fraction * n))))
            return [(np.sort(perm[n_test:]), np.sort(perm[:n_test]))]
        return list(train_test_pairs(kfold_indices(n, self.folds, self.seed)))


@dataclass
class CellResult:
    rmse: float
    r2: float
    fold_rmse: list
    fold_size: list


@dataclass
class EvalReport:
    """Held-out metrics per (algorithm, feature set).

    ``rmse`` is the root of the mean fold MSE; ``r2`` is computed on the
    pooled held-out predictions.
    """

    cells: dict
    seed: int
    protocol: Protocol
    fold_ids: np.ndarray
    n_samples: int
    held_out: bool = True

    def cell(self, algorithm, feature_set) -> CellResult:
        return self.cells[(ModelType.parse(algorithm), FeatureSet.parse(feature_set))]

    def rows(self):
        for algo in ALGORITHMS:
            for fs in FEATURE_SET_ORDER:
                if (algo, fs) in self.cells:
                    c = self.cells[(algo, fs)]
                    yield algo, fs, c

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("algorithm,feature_set,rmse,r2,evaluation\n")
        for algo, fs, c in self.rows():
            out.write(f"{algo.value},{fs.value},{c.rmse:.9g},{c.r2:.9g},held_out\n")
        return out.getvalue()

    def to_table(self) -> str:
        sets = [fs for fs in FEATURE_SET_ORDER if any(k[1] is fs for k in self.cells)]
        algos = [a for a in ALGORITHMS if any(k[0] is a for k in self.cells)]
        head1 = f"{'Regression':<18}" + "".join(f"| {len(fs.names):>2} Indices{'':<8}" for fs in sets)
        head2 = f"{'Algorithm':<18}" + "".join(f"| {'RMSE':>8} {'R^2':>8} " for _ in sets)
        lines = [head1, head2, "-" * len(head2)]
        for a in algos:
            row = f"{ALGORITHM_LABELS[a]:<18}"
            for fs in sets:
                c = self.cells.get((a, fs))
                row += f"| {c.rmse:8.4f} {c.r2:8.3f} " if c else f"| {'':>8} {'':>8} "
            lines.append(row)
        lines.append(f"(held-out metrics, seed={self.seed}, n={self.n_samples})")
        return "\n".join(lines) + "\n"


def run_table2_experiment(samples: Sequence[SpectralSample], axis: WavelengthAxis,
                          band_config: BandConfig = BandConfig(),
                          hyperparams: HyperParams = HyperParams(),
                          protocol: Protocol = Protocol(),
                          algorithms=ALGORITHMS, feature_sets=FEATURE_SET_ORDER) -> EvalReport:
    """Held-out RMSE and R^2 for every algorithm on every feature set.

    All cells share one fold assignment; each cell/fold fit gets the seed
    ``derive_seed(protocol.seed, algorithm_index, feature_set_index, fold)``
    with indices taken from ``ALGORITHMS`` and ``FEATURE_SET_ORDER``.
    """
    labeled = [s for s in samples if s.lwc is not None]
    n = len(labeled)
    if n < MIN_LABELED_SAMPLES:
        raise InsufficientData(f"need at least {MIN_LABELED_SAMPLES} labeled samples, got {n}")
    if not protocol.test_fraction and n < protocol.folds:
        raise InsufficientData(f"{n} samples cannot fill {protocol.folds} folds")
    y = np.array([s.lwc for s in labeled])
    X_all, names_all = feature_matrix(labeled, axis, band_config, FeatureSet.ELEVEN)

    splits = protocol.splits(n)
    fold_ids = np.full(n, -1, dtype=np.int64)
    for f, (train, test) in enumerate(splits):
        if np.intersect1d(train, test).size:
            raise AssertionError("train and test folds overlap")
        fold_ids[test] = f

    cells = {}
    for algo in algorithms:
        algo = ModelType.parse(algo)
        ai = ALGORITHMS.index(algo)
        for fs in feature_sets:
            fs = FeatureSet.parse(fs)
            fi = FEATURE_SET_ORDER.index(fs)
            cols = [names_all.index(nm) for nm in fs.names]
            X = X_all[:, cols]
            pooled = np.full(n, np.nan)
            fold_mse, fold_size = [], []
            for f, (train, test) in enumerate(splits):
                model = fit_model(algo, X[train], y[train], hyperparams,
                                  derive_seed(protocol.seed, ai, fi, f), fs.names)
                pred = predict(model, X[test])
                pooled[test] = pred
                fold_mse.append(float(np.mean((y[test] - pred) ** 2)))
                fold_size.append(int(test.size))
            held = ~np.isnan(pooled)
            cells[(algo, fs)] = CellResult(
                rmse=float(np.sqrt(np.mean(fold_mse))),
                r2=r_squared(y[held], pooled[held]),
                fold_rmse=[float(np.sqrt(m)) for m in fold_mse],
                fold_size=fold_size,
            )
    return EvalReport(cells, protocol.seed, protocol, fold_ids, n)
