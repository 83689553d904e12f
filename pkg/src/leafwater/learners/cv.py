"""Fold assignment and seed derivation shared by CV-based fitters."""

from __future__ import annotations

import numpy as np

from ..errors import InsufficientData


def derive_seed(seed: int, *tags: int) -> int:
    """Independent 64-bit child seed for ``(seed, *tags)``."""
    words = np.random.SeedSequence([int(seed) & ((1 << 64) - 1), *map(int, tags)]).generate_state(2, np.uint32)
    return (int(words[0]) << 32) | int(words[1])


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """One seeded shuffle, then ``k`` contiguous blocks of near-equal size."""
    if k < 2:
        raise InsufficientData(f"need at least 2 folds, got {k}")
    if n < k:
        raise InsufficientData(f"{n} rows cannot fill {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, k)


def train_test_pairs(folds: list[np.ndarray]):
    """Yield ``(train_idx, test_idx)`` for each fold, train indices sorted."""
    for i, test in enumerate(folds):
        train = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != i]))
        yield train, test
