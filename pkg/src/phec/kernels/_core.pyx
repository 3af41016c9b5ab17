# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Gini split scan and KNN neighbor voting.

Mirrors kernels/pure.py exactly; see that module for the contract. Each
arithmetic step uses the same operands in the same order as the numpy
fallback, so results are bit-identical across backends.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"


def best_gini_split(double[:, ::1] values, unsigned char[::1] labels, long long[::1] feature_ids):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t n_feat = feature_ids.shape[0]
    cdef long long total_pos = 0
    cdef Py_ssize_t i, fi, j
    cdef long long f
    cdef double best_score = np.inf
    cdef long long best_feature = -1
    cdef double best_threshold = np.nan
    cdef long long nl, pl, nr, pr, pos_run
    cdef double score, v_lo, v_hi
    cdef cnp.ndarray[cnp.intp_t, ndim=1] order
    cdef cnp.intp_t[::1] ord_view
    cdef double[::1] sv = np.empty(n, dtype=np.float64)
    cdef unsigned char[::1] sl = np.empty(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] col = np.empty(n, dtype=np.float64)

    for i in range(n):
        total_pos += labels[i]

    for fi in range(n_feat):
        f = feature_ids[fi]
        for i in range(n):
            col[i] = values[i, f]
        order = np.argsort(col, kind="stable")
        ord_view = order
        for i in range(n):
            sv[i] = col[ord_view[i]]
            sl[i] = labels[ord_view[i]]
        pos_run = 0
        for i in range(n - 1):
            pos_run += sl[i]
            v_lo = sv[i]
            v_hi = sv[i + 1]
            if v_hi > v_lo:
                nl = i + 1
                pl = pos_run
                nr = n - nl
                pr = total_pos - pl
                score = <double>(pl * (nl - pl)) / <double>nl + <double>(pr * (nr - pr)) / <double>nr
                if score < best_score:
                    best_score = score
                    best_feature = f
                    best_threshold = (v_lo + v_hi) / 2.0
    return int(best_feature), float(best_threshold), float(best_score)


def knn_query(double[:, ::1] train, unsigned char[::1] labels, queries_in, long long k):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] queries = np.ascontiguousarray(
        np.atleast_2d(np.asarray(queries_in, dtype=np.float64))
    )
    cdef Py_ssize_t n = train.shape[0]
    cdef Py_ssize_t d = train.shape[1]
    cdef Py_ssize_t n_q = queries.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.empty(n_q, dtype=np.int64)
    cdef double[::1] dist = np.empty(n, dtype=np.float64)
    cdef unsigned char[::1] taken = np.empty(n, dtype=np.uint8)
    cdef double[:, ::1] q_view = queries
    cdef Py_ssize_t qi, i, j, best_i, picked
    cdef double acc, diff, best_d
    cdef long long pos

    for qi in range(n_q):
        for i in range(n):
            acc = 0.0
            for j in range(d):
                diff = q_view[qi, j] - train[i, j]
                acc += diff * diff
            dist[i] = acc
            taken[i] = 0
        pos = 0
        # repeated strict-min selection == stable argsort on (distance, index)
        for picked in range(k):
            best_i = -1
            best_d = np.inf
            for i in range(n):
                if not taken[i] and dist[i] < best_d:
                    best_d = dist[i]
                    best_i = i
            taken[best_i] = 1
            pos += labels[best_i]
        counts[qi] = pos
    return counts
