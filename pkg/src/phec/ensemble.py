"""Score aggregation, thresholding, and constrained threshold search.

The tuning objective: over a uniform grid of thresholds on [0, 1], pick
the one maximizing TPR subject to FPR <= u. Ties go to the smallest FPR,
then the largest threshold (widest false-positive margin). When no grid
point satisfies the cap, the search degrades gracefully: it returns the
minimum-FPR point flagged infeasible instead of failing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

THREAT = 1
NORMAL_LABEL = 0


def aggregate_mean(scores) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise DataError("aggregate_mean: empty score vector")
    return float(scores.mean())


def aggregate_max(scores) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise DataError("aggregate_max: empty score vector")
    return float(scores.max())


AGGREGATORS = {"mean": aggregate_mean, "max": aggregate_max}


def label(score: float, gamma: float) -> int:
    """Threat iff score >= gamma (the boundary counts as threat)."""
    return THREAT if score >= gamma else NORMAL_LABEL


def gamma_grid(grid_size: int) -> np.ndarray:
    """grid_size uniformly spaced thresholds over [0, 1], endpoints included."""
    if grid_size < 2:
        raise DataError(f"grid_size must be >= 2, got {grid_size}")
    return np.linspace(0.0, 1.0, grid_size)


@dataclass
class ThresholdSearchResult:
    gamma_star: float
    feasible: bool
    u: float
    grid_size: int
    grid: np.ndarray
    tpr_curve: np.ndarray
    fpr_curve: np.ndarray
    best_index: int
    degenerate: bool = False

    @property
    def tpr(self) -> float:
        return float(self.tpr_curve[self.best_index])

    @property
    def fpr(self) -> float:
        return float(self.fpr_curve[self.best_index])

    def curve(self) -> list[tuple[float, float, float]]:
        return list(zip(self.grid.tolist(), self.tpr_curve.tolist(), self.fpr_curve.tolist()))


def tune_gamma(scores, truth, u: float, grid_size: int = 201) -> ThresholdSearchResult:
    """Grid search for the TPR-maximizing threshold under the FPR cap ``u``."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if scores.shape != truth.shape or scores.size < 1:
        raise DataError("tune_gamma: scores and truth must be equal-length, non-empty")
    if not 0 <= u <= 1:
        raise DataError(f"tune_gamma: u must be in [0, 1], got {u}")
    grid = gamma_grid(grid_size)

    positive = truth == 1
    n_pos = int(positive.sum())
    n_neg = int(truth.size - n_pos)
    degenerate = n_pos == 0 or n_neg == 0
    predicted = scores[None, :] >= grid[:, None]
    tp = (predicted & positive).sum(axis=1)
    fp = (predicted & ~positive).sum(axis=1)
    g = tp / n_pos if n_pos else np.zeros(grid_size)
    h = fp / n_neg if n_neg else np.zeros(grid_size)

    feasible_mask = h <= u
    if feasible_mask.any():
        candidates = np.nonzero(feasible_mask)[0]
        candidates = candidates[g[candidates] == g[candidates].max()]
        candidates = candidates[h[candidates] == h[candidates].min()]
        best = int(candidates[-1])
        feasible = True
    else:
        candidates = np.nonzero(h == h.min())[0]
        candidates = candidates[g[candidates] == g[candidates].max()]
        best = int(candidates[-1])
        feasible = False
    return ThresholdSearchResult(
        gamma_star=float(grid[best]),
        feasible=feasible,
        u=u,
        grid_size=grid_size,
        grid=grid,
        tpr_curve=g,
        fpr_curve=h,
        best_index=best,
        degenerate=degenerate,
    )


@dataclass
class AlphaSearchResult:
    alpha_star: float
    threshold: ThresholdSearchResult
    artifact: object
    per_alpha: list[tuple[float, ThresholdSearchResult]] = field(default_factory=list)


def tune_alpha(
    train,
    val,
    u: float,
    alpha_grid,
    fit_scores,
    grid_size: int = 201,
) -> AlphaSearchResult:
    """Outer grid search over the loss weight alpha.

    ``fit_scores(train, val, alpha)`` must train the variant's weighted
    classifier(s) and return (aggregated validation scores, artifact).
    Each alpha gets its own threshold search; the winner maximizes
    feasible TPR, with ties broken by smaller FPR, then alpha closest to
    0.5, then smaller alpha.
    """
    alphas = list(alpha_grid)
    if not alphas:
        raise DataError("tune_alpha: empty alpha grid")
    for a in alphas:
        if not 0 <= a <= 1:
            raise DataError(f"tune_alpha: alpha {a} outside [0, 1]")
    truth = val.binary_label
    runs = []
    for a in alphas:
        scores, artifact = fit_scores(train, val, a)
        result = tune_gamma(scores, truth, u, grid_size)
        runs.append((a, result, artifact))

    def rank(entry):
        a, result, _ = entry
        return (not result.feasible, -result.tpr, result.fpr, abs(a - 0.5), a)

    best_alpha, best_result, best_artifact = min(runs, key=rank)
    return AlphaSearchResult(
        alpha_star=best_alpha,
        threshold=best_result,
        artifact=best_artifact,
        per_alpha=[(a, r) for a, r, _ in runs],
    )


def phec_predict(score_fns, aggregator, gamma_star: float, x) -> int:
    """Collect one probability per member, aggregate, and threshold."""
    agg = AGGREGATORS[aggregator] if isinstance(aggregator, str) else aggregator
    scores = [fn(x) for fn in score_fns]
    return label(agg(scores), gamma_star)
