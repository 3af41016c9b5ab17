"""Logistic surrogate losses, plain and class-weighted.

The weighted form puts weight (1 - alpha) on positive samples and alpha
on negatives:

    l_a(z, y) = (1 - a) * 1{y=+1} * l(z) + a * 1{y=-1} * l(-z)

with l(t) = log(1 + exp(-t)) and z the classifier's raw score. At
alpha = 0.5 this is exactly half the unweighted loss, so the two give
identical gradient-descent trajectories once the learning rate is doubled.
"""

from __future__ import annotations

import numpy as np


def softplus(t):
    """log(1 + exp(t)), overflow-safe for |t| up to 1e4 and beyond."""
    t = np.asarray(t, dtype=np.float64)
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def logistic_loss(z, y):
    """Unweighted logistic loss on raw score z and label y in {-1, +1}."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y)
    return softplus(-np.where(y == 1, z, -z))


def weighted_ce_loss(z, y, alpha: float):
    """Alpha-weighted logistic loss on raw score z, label y in {-1, +1}."""
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y)
    positive = y == 1
    weight = np.where(positive, 1.0 - alpha, alpha)
    return weight * softplus(-np.where(positive, z, -z))


def sample_weights(y01, alpha: float | None):
    """Per-sample loss weights for labels in {0, 1}.

    alpha=None selects the unweighted loss (all ones).
    """
    y01 = np.asarray(y01)
    if alpha is None:
        return np.ones(y01.shape, dtype=np.float64)
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return np.where(y01 == 1, 1.0 - alpha, alpha)
