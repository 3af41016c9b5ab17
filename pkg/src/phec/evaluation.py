"""Confusion-matrix metrics, per-category detection breakdown, gradient
checking, and per-instance inference timing."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .classify.nets import (
    LinearModel,
    MlpModel,
    clone_with_params,
    flatten_grads,
    flatten_params,
    linear_as_mlp,
    loss_and_grads,
)
from .data import NORMAL
from .errors import DataError, NumericError


@dataclass
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class Metrics:
    tpr: float
    fpr: float
    accuracy: float
    precision: float
    f1: float
    degenerate_flags: set[str] = field(default_factory=set)

    def as_dict(self) -> dict:
        return {
            "tpr": self.tpr,
            "fpr": self.fpr,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "f1": self.f1,
            "degenerate_flags": sorted(self.degenerate_flags),
        }


def confusion(predicted, truth) -> ConfusionMatrix:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.size < 1:
        raise DataError("confusion: predicted and truth must be equal-length, non-empty")
    pos = truth == 1
    pred_pos = predicted == 1
    return ConfusionMatrix(
        tp=int((pred_pos & pos).sum()),
        fp=int((pred_pos & ~pos).sum()),
        tn=int((~pred_pos & ~pos).sum()),
        fn=int((~pred_pos & pos).sum()),
    )


def metrics(cm: ConfusionMatrix) -> Metrics:
    """All five metrics; degenerate denominators yield 0 plus a flag
    instead of a division error."""
    if cm.total < 1:
        raise DataError("metrics: empty confusion matrix")
    flags: set[str] = set()

    def ratio(num, den, name):
        if den == 0:
            flags.add(name)
            return 0.0
        return num / den

    tpr = ratio(cm.tp, cm.tp + cm.fn, "tpr")
    fpr = ratio(cm.fp, cm.fp + cm.tn, "fpr")
    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    accuracy = (cm.tp + cm.tn) / cm.total
    f1 = ratio(2 * precision * tpr, precision + tpr, "f1")
    return Metrics(tpr, fpr, accuracy, precision, f1, flags)


@dataclass
class CategoryDetection:
    total: int
    detected: int
    missed: int
    tpr: float


def per_category_tpr(predicted, truth_categories) -> dict[str, CategoryDetection]:
    """Detection counts per attack category; Normal is excluded."""
    predicted = np.asarray(predicted)
    categories = np.asarray(truth_categories, dtype=object)
    if predicted.shape != categories.shape:
        raise DataError("per_category_tpr: length mismatch")
    out: dict[str, CategoryDetection] = {}
    for cat in sorted(set(categories.tolist()) - {NORMAL}):
        members = categories == cat
        total = int(members.sum())
        detected = int((predicted[members] == 1).sum())
        out[cat] = CategoryDetection(total, detected, total - detected, detected / total)
    return out


def grad_check(model, X, y, alpha=None, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients
    of the mean (weighted) loss, over every parameter."""
    if epsilon <= 0:
        raise DataError(f"grad_check: epsilon must be > 0, got {epsilon}")
    net = linear_as_mlp(model) if isinstance(model, LinearModel) else model
    if not isinstance(net, MlpModel):
        raise DataError(f"grad_check: unsupported model type {type(model).__name__}")
    net = net.copy()
    net.alpha = alpha
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)

    _, grads_w, grads_b = loss_and_grads(net, X, y)
    analytic = flatten_grads(grads_w, grads_b)
    if not np.all(np.isfinite(analytic)):
        raise NumericError("grad_check: non-finite analytic gradient")

    theta = flatten_params(net)
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        bumped = theta.copy()
        bumped[i] = theta[i] + epsilon
        loss_plus, _, _ = loss_and_grads(clone_with_params(net, bumped), X, y)
        bumped[i] = theta[i] - epsilon
        loss_minus, _, _ = loss_and_grads(clone_with_params(net, bumped), X, y)
        numeric[i] = (loss_plus - loss_minus) / (2 * epsilon)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def time_per_instance(predictor, X, repetitions: int = 5) -> float:
    """Median wall-clock seconds per single-sample prediction.

    The predictor is invoked exactly repetitions * len(X) times; the
    median over repetitions absorbs the cold first pass and scheduler
    noise, so no extra warm-up call is made.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 1:
        raise DataError("time_per_instance: empty input")
    if repetitions < 3:
        raise DataError(f"time_per_instance: repetitions must be >= 3, got {repetitions}")
    per_pass = []
    for _ in range(repetitions):
        start = time.perf_counter()
        for row in X:
            predictor(row)
        per_pass.append((time.perf_counter() - start) / X.shape[0])
    return float(np.median(per_pass))
