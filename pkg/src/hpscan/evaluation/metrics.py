from typing import Sequence

import numpy as np

from ..core.errors import InputError


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve as the normalized Mann-Whitney U statistic.

    Ties between a positive and a negative count one half. Runs in
    O(n log n) through average ranks.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputError("scores and labels must be 1-D and of equal length")
    if not np.isfinite(scores).all():
        raise InputError("scores contain NaN or infinite values")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("AUROC needs at least one positive and one negative sample")

    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    upper = np.cumsum(counts)
    average_rank = upper - (counts - 1) / 2.0
    rank_sum = average_rank[inverse.ravel()][labels].sum()
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def recall(predicted: Sequence[int], labels: Sequence[int]) -> float:
    """TP / (TP + FN) over the positive labels."""
    predicted = np.asarray(predicted).astype(bool)
    labels = np.asarray(labels).astype(bool)
    positives = int(labels.sum())
    if positives == 0:
        raise InputError("Recall is undefined without positive samples")
    return int((predicted & labels).sum()) / positives
