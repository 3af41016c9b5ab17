"""K-nearest-neighbour classifier with probabilistic voting.

The predicted threat probability is the fraction of threat labels among
the K nearest stored points (Euclidean distance, ties broken toward the
smaller stored index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import DataError


@dataclass
class KnnModel:
    features: np.ndarray
    labels: np.ndarray
    k: int


def knn_fit(X, y, k: int) -> KnnModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.uint8)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError("knn_fit: X and y shapes disagree")
    if not 1 <= k <= X.shape[0]:
        raise DataError(f"knn_fit: K={k} outside [1, {X.shape[0]}]")
    return KnnModel(X, y, int(k))


def knn_predict_proba(model: KnnModel, x):
    """Threat probability for one sample (1-D input) or a batch (2-D)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    queries = np.atleast_2d(x)
    if queries.shape[1] != model.features.shape[1]:
        raise DataError(
            f"knn: query has {queries.shape[1]} features, model stores "
            f"{model.features.shape[1]}"
        )
    counts = kernels.knn_query(model.features, model.labels, queries, model.k)
    probs = counts / model.k
    return float(probs[0]) if single else probs
