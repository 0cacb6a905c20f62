from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np

from ..core.errors import InputError


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    k: int
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def splits(self) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]:
        for fold in range(self.k):
            yield fold, self.train_indices(fold), self.test_indices(fold)


def stratified_kfold(labels: Sequence, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Shuffle each class with ``seed`` and deal its samples round-robin into ``k`` folds.

    Dealing continues where the previous class stopped, so fold sizes stay
    within one of each other overall as well as per class.
    """
    if k < 2:
        raise InputError(f"k must be at least 2, got {k}")
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    small = [f"{c!s} ({n})" for c, n in zip(classes, counts) if n < k]
    if small:
        raise InputError(f"Every class needs at least k={k} samples; too few in: {', '.join(small)}")

    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for cls in classes:
        members = rng.permutation(np.flatnonzero(labels == cls))
        fold_of[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return FoldAssignment(fold_of=fold_of, k=k, seed=seed)
