"""NumPy versions of the compiled kernels, used when the extension is unavailable."""

import numpy as np

# rows per block, chosen so a block of pairwise differences stays near 32 MB
_BLOCK_ELEMS = 4_000_000


def _block_rows(other_rows, d):
    return max(1, _BLOCK_ELEMS // max(1, other_rows * d))


def _sq_dists(A, B):
    # explicit differences rather than the |a|^2 - 2ab + |b|^2 expansion,
    # which loses exact ties to cancellation
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def assign_labels(X, C):
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    n = X.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    step = _block_rows(C.shape[0], X.shape[1])
    for start in range(0, n, step):
        D = _sq_dists(X[start:start + step], C)
        idx = np.argmin(D, axis=1)  # first minimum, so lowest center index
        labels[start:start + step] = idx
        dist[start:start + step] = D[np.arange(len(idx)), idx]
    return labels, dist


def update_centers(X, labels, old):
    X = np.ascontiguousarray(X, dtype=np.float64)
    old = np.asarray(old, dtype=np.float64)
    k, d = old.shape
    sums = np.zeros((k, d), dtype=np.float64)
    np.add.at(sums, labels, X)
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    nonempty = counts > 0
    sums[nonempty] /= counts[nonempty, None]
    sums[~nonempty] = old[~nonempty]
    return sums, counts


def knn_indices(Z, k):
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    n = Z.shape[0]
    if k < 1 or k >= n:
        raise ValueError("need 1 <= k < number of points")
    out = np.empty((n, k), dtype=np.int64)
    step = _block_rows(n, Z.shape[1])
    for start in range(0, n, step):
        D = _sq_dists(Z[start:start + step], Z)
        rows = np.arange(D.shape[0])
        D[rows, start + rows] = np.inf
        # stable sort keeps equal distances in index order
        out[start:start + step] = np.argsort(D, axis=1, kind="stable")[:, :k]
    return out
