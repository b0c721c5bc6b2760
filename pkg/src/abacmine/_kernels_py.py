"""NumPy implementations of the clustering hot kernels.

This is the fallback twin of the compiled extension (_kernels_cy); both
must produce bit-identical results, including tie handling: argmin/argmax
ties always resolve to the lowest index / lowest code.
"""

from __future__ import annotations

import numpy as np

# Rows per block in pairwise computations, keeping block * n temporaries small.
_BLOCK = 256


def dissim_matrix(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pairwise Hamming (simple matching) dissimilarity, shape (len(X), len(Y))."""
    nx, m = X.shape
    ny = Y.shape[0]
    out = np.empty((nx, ny), dtype=np.int64)
    for start in range(0, nx, _BLOCK):
        stop = min(start + _BLOCK, nx)
        acc = np.zeros((stop - start, ny), dtype=np.int64)
        for f in range(m):
            acc += X[start:stop, f, None] != Y[None, :, f]
        out[start:stop] = acc
    return out


def assign(X: np.ndarray, modes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-mode labels (ties to the lowest cluster index) and distances."""
    d = dissim_matrix(X, modes)
    labels = np.argmin(d, axis=1).astype(np.int64)
    dists = d[np.arange(len(X)), labels]
    return labels, dists


def update_modes(X: np.ndarray, w: np.ndarray, labels: np.ndarray,
                 prev_modes: np.ndarray, n_cats: np.ndarray) -> np.ndarray:
    """Per-feature weighted majority per cluster; ties to the lowest code.

    Clusters with no members keep their previous mode.
    """
    k, m = prev_modes.shape
    modes = prev_modes.copy()
    for c in range(k):
        members = labels == c
        if not members.any():
            continue
        Xc = X[members]
        wc = w[members]
        for f in range(m):
            counts = np.bincount(Xc[:, f], weights=wc, minlength=int(n_cats[f]))
            modes[c, f] = np.argmax(counts)
    return modes


def member_cost(X: np.ndarray, w: np.ndarray, labels: np.ndarray,
                modes: np.ndarray) -> int:
    """Total weighted dissimilarity of each record to its assigned mode."""
    mismatches = (X != modes[labels]).sum(axis=1)
    return int((mismatches * w).sum())


def density(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted matching density of each record against the whole set.

    density(i) = sum_j w_j * matches(i, j) / (m * sum_j w_j), which reduces
    to summing each record's own per-feature value frequencies.
    """
    n, m = X.shape
    total = float(w.sum())
    dens = np.zeros(n, dtype=np.float64)
    for f in range(m):
        counts = np.bincount(X[:, f], weights=w)
        dens += counts[X[:, f]]
    return dens / (m * total)


def cluster_dist_sums(X: np.ndarray, w: np.ndarray, labels: np.ndarray,
                      k: int) -> np.ndarray:
    """S[i, c] = sum of weighted distances from record i to cluster c's members."""
    n, m = X.shape
    ind = np.zeros((n, k), dtype=np.float64)
    ind[np.arange(n), labels] = w
    out = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        acc = np.zeros((stop - start, n), dtype=np.float64)
        for f in range(m):
            acc += X[start:stop, f, None] != X[None, :, f]
        out[start:stop] = acc @ ind
    return out
