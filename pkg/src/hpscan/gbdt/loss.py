"""Weighted logistic loss and its derivatives with respect to the margin."""

from typing import Tuple, Union

import numpy as np

MARGIN_CLAMP = 30.0

ArrayLike = Union[float, np.ndarray]


def sigmoid(margin: ArrayLike) -> ArrayLike:
    m = np.clip(margin, -MARGIN_CLAMP, MARGIN_CLAMP)
    return 1.0 / (1.0 + np.exp(-m))


def logistic_grad_hess(
    margin: ArrayLike, label: ArrayLike, weight: ArrayLike = 1.0
) -> Tuple[ArrayLike, ArrayLike]:
    """First and second derivative of the weighted log-loss.

    g = w * (p - y), h = w * p * (1 - p) with p = sigmoid(margin).
    """
    p = sigmoid(margin)
    return weight * (p - label), weight * p * (1.0 - p)


def log_loss(margin: ArrayLike, label: ArrayLike, weight: ArrayLike = 1.0) -> float:
    """Weighted sum of per-sample logistic losses, evaluated stably."""
    m = np.clip(np.asarray(margin, dtype=np.float64), -MARGIN_CLAMP, MARGIN_CLAMP)
    y = np.asarray(label, dtype=np.float64)
    # log(1 + e^m) - y*m
    per_sample = np.logaddexp(0.0, m) - y * m
    return float(np.sum(np.asarray(weight, dtype=np.float64) * per_sample))


def split_gain(
    gl: ArrayLike, hl: ArrayLike, gr: ArrayLike, hr: ArrayLike, l2_lambda: float, gain_gamma: float
) -> ArrayLike:
    """Loss reduction from splitting a node into (left, right) children."""
    return 0.5 * (
        gl * gl / (hl + l2_lambda)
        + gr * gr / (hr + l2_lambda)
        - (gl + gr) ** 2 / (hl + hr + l2_lambda)
    ) - gain_gamma
