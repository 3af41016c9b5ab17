"""Random forest of binary Gini trees with probabilistic leaves.

Trees are grown greedily; split candidates are midpoints between
consecutive distinct sorted values, ties broken toward the lowest feature
index then the lowest threshold (the kernel encodes that rule). Leaves
store the threat proportion of the training samples they hold; the forest
probability is the plain mean of the per-tree leaf proportions.

Per-tree RNG streams derive from (seed, tree index), so growth order and
any parallel schedule cannot change the fitted model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from .._rng import rng_for
from ..errors import DataError

_LEAF = -1


@dataclass
class Tree:
    """Flat array representation; node 0 is the root.

    feature[i] == -1 marks a leaf; value[i] is its threat proportion.
    Queries go left when x[feature] < threshold.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict_one(self, x) -> float:
        node = 0
        feature = self.feature
        while feature[node] != _LEAF:
            if x[feature[node]] < self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return float(self.value[node])


@dataclass
class ForestModel:
    trees: list[Tree]
    n_features: int
    max_depth: int | None
    features_per_split: int
    bootstrap: bool
    seed: int = 0


def rf_fit(
    X,
    y,
    trees: int = 100,
    max_depth: int | None = 12,
    features_per_split: int | None = None,
    bootstrap: bool = True,
    seed: int = 0,
) -> ForestModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.uint8)
    if trees < 1:
        raise DataError(f"rf_fit: tree count must be >= 1, got {trees}")
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise DataError("rf_fit: X and y shapes disagree")
    n, d = X.shape
    fps = features_per_split if features_per_split is not None else int(np.ceil(np.sqrt(d)))
    fps = min(max(fps, 1), d)
    grown = []
    for b in range(trees):
        rng = rng_for(seed, "tree", b)
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        grown.append(_grow_tree(X, y, idx, max_depth, fps, rng))
    return ForestModel(grown, d, max_depth, fps, bootstrap, seed)


def _grow_tree(X, y, root_idx, max_depth, fps, rng) -> Tree:
    d = X.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node():
        feature.append(_LEAF)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(np.nan)
        return len(feature) - 1

    # explicit stack keeps deep separable trees off the recursion limit
    stack = [(new_node(), root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        labels = y[idx]
        pos = int(labels.sum())
        if pos == 0 or pos == idx.size or (max_depth is not None and depth >= max_depth):
            value[node] = pos / idx.size
            continue
        if fps < d:
            candidates = np.sort(rng.choice(d, size=fps, replace=False)).astype(np.int64)
        else:
            candidates = np.arange(d, dtype=np.int64)
        f, thr, _ = kernels.best_gini_split(
            np.ascontiguousarray(X[idx]), np.ascontiguousarray(labels), candidates
        )
        if f < 0:
            value[node] = pos / idx.size
            continue
        mask = X[idx, f] < thr
        feature[node] = f
        threshold[node] = thr
        left_id = new_node()
        right_id = new_node()
        left[node] = left_id
        right[node] = right_id
        # push right first so the left child is grown first (stable order)
        stack.append((right_id, idx[~mask], depth + 1))
        stack.append((left_id, idx[mask], depth + 1))
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
    )


def rf_predict_proba(model: ForestModel, x):
    """Mean leaf proportion over all trees; scalar for 1-D input."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if rows.shape[1] != model.n_features:
        raise DataError(
            f"forest: query has {rows.shape[1]} features, model expects {model.n_features}"
        )
    out = np.empty(rows.shape[0], dtype=np.float64)
    for i, row in enumerate(rows):
        total = 0.0
        for tree in model.trees:
            total += tree.predict_one(row)
        out[i] = total / len(model.trees)
    return float(out[0]) if single else out
