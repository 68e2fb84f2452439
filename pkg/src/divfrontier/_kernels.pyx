# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled loops for k-means assignment/update and exact k-nearest neighbours.

Semantics match ``_kernels_py`` exactly: squared distances are summed
coordinate by coordinate, ties go to the lowest index.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def assign_labels(const double[:, ::1] X, const double[:, ::1] C):
    """Nearest center for every row of X; returns (labels, squared distances)."""
    cdef Py_ssize_t n = X.shape[0], k = C.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double best, acc, diff
    cdef Py_ssize_t best_j
    labels_arr = np.empty(n, dtype=np.int64)
    dist_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef double[::1] dist = dist_arr
    with nogil:
        for i in range(n):
            best = INFINITY
            best_j = 0
            for j in range(k):
                acc = 0.0
                for t in range(d):
                    diff = X[i, t] - C[j, t]
                    acc = acc + diff * diff
                    if acc > best:
                        break
                if acc < best:
                    best = acc
                    best_j = j
            labels[i] = best_j
            dist[i] = best
    return labels_arr, dist_arr


def update_centers(const double[:, ::1] X, const cnp.int64_t[::1] labels, const double[:, ::1] old):
    """Cluster means in row order; empty clusters keep their previous center."""
    cdef Py_ssize_t n = X.shape[0], k = old.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, t
    sums_arr = np.zeros((k, d), dtype=np.float64)
    counts_arr = np.zeros(k, dtype=np.int64)
    cdef double[:, ::1] sums = sums_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    with nogil:
        for i in range(n):
            j = labels[i]
            counts[j] += 1
            for t in range(d):
                sums[j, t] = sums[j, t] + X[i, t]
        for j in range(k):
            for t in range(d):
                if counts[j] > 0:
                    sums[j, t] = sums[j, t] / counts[j]
                else:
                    sums[j, t] = old[j, t]
    return sums_arr, counts_arr


def knn_indices(const double[:, ::1] Z, Py_ssize_t k):
    """Indices of the k nearest other rows of Z, ordered by (distance, index)."""
    cdef Py_ssize_t n = Z.shape[0], d = Z.shape[1]
    cdef Py_ssize_t i, j, t, pos, filled
    cdef double acc, diff
    if k < 1 or k >= n:
        raise ValueError("need 1 <= k < number of points")
    out_arr = np.empty((n, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    bd_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] bd = bd_arr
    with nogil:
        for i in range(n):
            filled = 0
            for j in range(n):
                if j == i:
                    continue
                acc = 0.0
                for t in range(d):
                    diff = Z[i, t] - Z[j, t]
                    acc = acc + diff * diff
                if filled == k and acc >= bd[k - 1]:
                    continue
                # j is larger than every stored index, so it goes after equal distances
                if filled < k:
                    pos = filled
                    filled += 1
                else:
                    pos = k - 1
                while pos > 0 and bd[pos - 1] > acc:
                    bd[pos] = bd[pos - 1]
                    out[i, pos] = out[i, pos - 1]
                    pos -= 1
                bd[pos] = acc
                out[i, pos] = j
    return out_arr
