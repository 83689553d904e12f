"""Hyperparameter containers with their defaults."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

from ..errors import InvalidConfig


def _positive_int(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise InvalidConfig(f"{name} must be an integer >= {minimum}, got {value!r}")


def _depth(value):
    # None means unbounded
    if value is not None:
        _positive_int("max_depth", value, minimum=0)


@dataclass(frozen=True)
class TreeParams:
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1

    def __post_init__(self):
        _depth(self.max_depth)
        _positive_int("min_samples_leaf", self.min_samples_leaf)


@dataclass(frozen=True)
class GbmParams:
    n_trees: int = 200
    learning_rate: float = 0.1
    max_depth: Optional[int] = 3
    min_samples_leaf: int = 2

    def __post_init__(self):
        _positive_int("n_trees", self.n_trees, minimum=0)
        if not 0.0 < self.learning_rate <= 1.0:
            raise InvalidConfig(f"learning_rate must lie in (0, 1], got {self.learning_rate}")
        _depth(self.max_depth)
        _positive_int("min_samples_leaf", self.min_samples_leaf)


@dataclass(frozen=True)
class LassoParams:
    lambda_grid: Optional[tuple] = None  # None: log-spaced from lambda_max
    n_lambdas: int = 60
    lambda_ratio: float = 1e-4
    cv_folds: int = 5
    max_iter: int = 100_000
    tol: float = 1e-7

    def __post_init__(self):
        _positive_int("cv_folds", self.cv_folds, minimum=2)
        _positive_int("max_iter", self.max_iter)
        _positive_int("n_lambdas", self.n_lambdas)
        if not self.tol > 0:
            raise InvalidConfig(f"tol must be positive, got {self.tol}")
        if not 0 < self.lambda_ratio < 1:
            raise InvalidConfig(f"lambda_ratio must lie in (0, 1), got {self.lambda_ratio}")
        if self.lambda_grid is not None:
            grid = tuple(float(v) for v in self.lambda_grid)
            if not grid or any(v <= 0 for v in grid):
                raise InvalidConfig("lambda_grid must hold positive values")
            if any(a < b for a, b in zip(grid, grid[1:])):
                raise InvalidConfig("lambda_grid must be descending")
            object.__setattr__(self, "lambda_grid", grid)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    mtry: Optional[int] = None  # None: max(1, p // 3)
    bootstrap: bool = True
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1

    def __post_init__(self):
        _positive_int("n_trees", self.n_trees)
        if self.mtry is not None:
            _positive_int("mtry", self.mtry)
        _depth(self.max_depth)
        _positive_int("min_samples_leaf", self.min_samples_leaf)

    def resolved_mtry(self, n_features: int) -> int:
        if self.mtry is None:
            return max(1, n_features // 3)
        return min(self.mtry, n_features)


@dataclass(frozen=True)
class StackParams:
    cv_folds: int = 5

    def __post_init__(self):
        _positive_int("cv_folds", self.cv_folds, minimum=2)


@dataclass(frozen=True)
class HyperParams:
    gbm: GbmParams = field(default_factory=GbmParams)
    lasso: LassoParams = field(default_factory=LassoParams)
    rf: ForestParams = field(default_factory=ForestParams)
    stack: StackParams = field(default_factory=StackParams)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParams":
        lasso = dict(d.get("lasso", {}))
        if lasso.get("lambda_grid") is not None:
            lasso["lambda_grid"] = tuple(lasso["lambda_grid"])
        return cls(
            gbm=GbmParams(**d.get("gbm", {})),
            lasso=LassoParams(**lasso),
            rf=ForestParams(**d.get("rf", {})),
            stack=StackParams(**d.get("stack", {})),
        )
