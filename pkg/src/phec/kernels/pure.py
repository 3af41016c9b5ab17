"""Pure numpy implementations of the hot kernels.

These are the reference semantics; the compiled backend in ``_core.pyx``
mirrors them operation-for-operation so both produce bit-identical
results (same IEEE ops on the same operands in the same order):

* split scores are formed as ``pl*(nl-pl)/nl + pr*(nr-pr)/nr`` with exact
  int64 products, so candidate ordering is reproducible;
* KNN distances accumulate feature-by-feature, matching the scalar loop
  in the C kernel.
"""

from __future__ import annotations

import numpy as np

NAME = "pure"

_KNN_BLOCK = 256


def best_gini_split(values, labels, feature_ids):
    """Best binary split of a node by Gini impurity.

    values: (n, d) float64 feature matrix of the node's samples.
    labels: (n,) uint8 binary labels.
    feature_ids: int64 candidate feature indices, ascending.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Ties are broken toward the lowest feature index, then the
    lowest threshold. Returns (feature, threshold, score); feature is -1
    when no candidate exists (all considered columns constant).
    """
    n = values.shape[0]
    total_pos = int(labels.sum())
    best_score = np.inf
    best_feature = -1
    best_threshold = np.nan
    for f in feature_ids:
        col = values[:, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        sl = labels[order]
        cut = np.nonzero(sv[1:] > sv[:-1])[0]
        if cut.size == 0:
            continue
        pos_prefix = np.cumsum(sl)
        nl = cut + 1
        pl = pos_prefix[cut]
        nr = n - nl
        pr = total_pos - pl
        score = pl * (nl - pl) / nl + pr * (nr - pr) / nr
        j = int(np.argmin(score))
        if score[j] < best_score:
            best_score = score[j]
            best_feature = int(f)
            best_threshold = (sv[cut[j]] + sv[cut[j] + 1]) / 2.0
    return best_feature, best_threshold, best_score


def knn_query(train, labels, queries, k):
    """Count positive labels among the k nearest stored points per query.

    Euclidean distance; distance ties broken toward the smaller stored
    index. Returns an int64 array of positive counts, one per query.
    """
    train = np.ascontiguousarray(train, dtype=np.float64)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.uint8)
    n, d = train.shape
    counts = np.empty(queries.shape[0], dtype=np.int64)
    for start in range(0, queries.shape[0], _KNN_BLOCK):
        block = queries[start : start + _KNN_BLOCK]
        dist = np.zeros((block.shape[0], n))
        for j in range(d):
            diff = block[:, j : j + 1] - train[:, j]
            dist += diff * diff
        idx = np.argsort(dist, axis=1, kind="stable")[:, :k]
        counts[start : start + block.shape[0]] = labels[idx].sum(axis=1)
    return counts
