# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of _kernels_py.

Same functions, same tie-breaking (lowest index / lowest code), bit-identical
results; just plain C loops instead of NumPy temporaries.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def dissim_matrix(cnp.int32_t[:, ::1] X not None, cnp.int32_t[:, ::1] Y not None):
    cdef Py_ssize_t nx = X.shape[0], ny = Y.shape[0], m = X.shape[1]
    cdef cnp.ndarray out_arr = np.empty((nx, ny), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, f
    cdef cnp.int64_t d
    with nogil:
        for i in range(nx):
            for j in range(ny):
                d = 0
                for f in range(m):
                    if X[i, f] != Y[j, f]:
                        d += 1
                out[i, j] = d
    return out_arr


def assign(cnp.int32_t[:, ::1] X not None, cnp.int32_t[:, ::1] modes not None):
    cdef Py_ssize_t n = X.shape[0], k = modes.shape[0], m = X.shape[1]
    cdef cnp.ndarray labels_arr = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray dists_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef cnp.int64_t[::1] dists = dists_arr
    cdef Py_ssize_t i, c, f
    cdef cnp.int64_t d, best_d
    cdef Py_ssize_t best_c
    with nogil:
        for i in range(n):
            best_c = 0
            best_d = m + 1
            for c in range(k):
                d = 0
                for f in range(m):
                    if X[i, f] != modes[c, f]:
                        d += 1
                if d < best_d:
                    best_d = d
                    best_c = c
            labels[i] = best_c
            dists[i] = best_d
    return labels_arr, dists_arr


def update_modes(cnp.int32_t[:, ::1] X not None, cnp.int64_t[::1] w not None,
                 cnp.int64_t[::1] labels not None,
                 cnp.int32_t[:, ::1] prev_modes not None,
                 cnp.int64_t[::1] n_cats not None):
    cdef Py_ssize_t k = prev_modes.shape[0], m = prev_modes.shape[1]
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t max_cats = 0
    cdef Py_ssize_t f
    for f in range(m):
        if n_cats[f] > max_cats:
            max_cats = n_cats[f]
    cdef cnp.ndarray modes_arr = np.asarray(prev_modes).copy()
    cdef cnp.int32_t[:, ::1] modes = modes_arr
    counts_arr = np.zeros((k, m, max_cats), dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] counts = counts_arr
    present_arr = np.zeros(k, dtype=np.int64)
    cdef cnp.int64_t[::1] present = present_arr
    cdef Py_ssize_t i, c, v, best_v
    cdef cnp.int64_t best_cnt
    with nogil:
        for i in range(n):
            c = labels[i]
            present[c] += w[i]
            for f in range(m):
                counts[c, f, X[i, f]] += w[i]
        for c in range(k):
            if present[c] == 0:
                continue
            for f in range(m):
                best_v = 0
                best_cnt = -1
                for v in range(n_cats[f]):
                    if counts[c, f, v] > best_cnt:
                        best_cnt = counts[c, f, v]
                        best_v = v
                modes[c, f] = <cnp.int32_t> best_v
    return modes_arr


def member_cost(cnp.int32_t[:, ::1] X not None, cnp.int64_t[::1] w not None,
                cnp.int64_t[::1] labels not None,
                cnp.int32_t[:, ::1] modes not None):
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    cdef Py_ssize_t i, f
    cdef cnp.int64_t total = 0, d
    cdef Py_ssize_t c
    with nogil:
        for i in range(n):
            c = labels[i]
            d = 0
            for f in range(m):
                if X[i, f] != modes[c, f]:
                    d += 1
            total += d * w[i]
    return int(total)


def density(cnp.int32_t[:, ::1] X not None, cnp.int64_t[::1] w not None):
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    cdef Py_ssize_t i, f
    cdef cnp.int64_t max_code = 0
    cdef cnp.int64_t total = 0
    for i in range(n):
        total += w[i]
        for f in range(m):
            if X[i, f] > max_code:
                max_code = X[i, f]
    counts_arr = np.zeros((m, max_code + 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] counts = counts_arr
    cdef cnp.ndarray dens_arr = np.zeros(n, dtype=np.float64)
    cdef cnp.float64_t[::1] dens = dens_arr
    cdef cnp.float64_t acc
    with nogil:
        for i in range(n):
            for f in range(m):
                counts[f, X[i, f]] += w[i]
        for i in range(n):
            acc = 0.0
            for f in range(m):
                acc += counts[f, X[i, f]]
            dens[i] = acc / (m * <cnp.float64_t> total)
    return dens_arr


def cluster_dist_sums(cnp.int32_t[:, ::1] X not None, cnp.int64_t[::1] w not None,
                      cnp.int64_t[::1] labels not None, Py_ssize_t k):
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    cdef cnp.ndarray out_arr = np.zeros((n, k), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, f
    cdef cnp.int64_t d
    with nogil:
        for i in range(n):
            for j in range(n):
                d = 0
                for f in range(m):
                    if X[i, f] != X[j, f]:
                        d += 1
                out[i, labels[j]] += d * w[j]
    return out_arr
