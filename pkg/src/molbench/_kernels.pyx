# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; semantics and accumulation order match _kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport INFINITY

cnp.import_array()


def scatter_add_rows(values, index, Py_ssize_t n_out):
    cdef const double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const long long[::1] idx = np.ascontiguousarray(index, dtype=np.int64)
    cdef Py_ssize_t m = v.shape[0], d = v.shape[1], k, j, t
    if idx.shape[0] != m:
        raise ValueError("index length must match number of rows")
    out_arr = np.zeros((n_out, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for k in range(m):
        t = idx[k]
        if t < 0 or t >= n_out:
            raise IndexError(f"segment index {t} out of range")
        for j in range(d):
            out[t, j] += v[k, j]
    return out_arr


def segment_max(values, index, Py_ssize_t n_out):
    cdef const double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const long long[::1] idx = np.ascontiguousarray(index, dtype=np.int64)
    cdef Py_ssize_t m = v.shape[0], d = v.shape[1], k, j, t
    if idx.shape[0] != m:
        raise ValueError("index length must match number of rows")
    out_arr = np.full((n_out, d), -np.inf)
    cdef double[:, ::1] out = out_arr
    for k in range(m):
        t = idx[k]
        if t < 0 or t >= n_out:
            raise IndexError(f"segment index {t} out of range")
        for j in range(d):
            if v[k, j] > out[t, j]:
                out[t, j] = v[k, j]
    return out_arr


cdef void _merge_sort(double* key, long long* pos, double* tkey, long long* tpos,
                      Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    # stable sort of key[lo:hi] carrying pos
    cdef Py_ssize_t mid, i, j, k
    if hi - lo < 2:
        return
    mid = (lo + hi) // 2
    _merge_sort(key, pos, tkey, tpos, lo, mid)
    _merge_sort(key, pos, tkey, tpos, mid, hi)
    i = lo
    j = mid
    k = lo
    while i < mid and j < hi:
        if key[j] < key[i]:
            tkey[k] = key[j]; tpos[k] = pos[j]; j += 1
        else:
            tkey[k] = key[i]; tpos[k] = pos[i]; i += 1
        k += 1
    while i < mid:
        tkey[k] = key[i]; tpos[k] = pos[i]; i += 1; k += 1
    while j < hi:
        tkey[k] = key[j]; tpos[k] = pos[j]; j += 1; k += 1
    for k in range(lo, hi):
        key[k] = tkey[k]
        pos[k] = tpos[k]


def best_split(X, y, rows, features, Py_ssize_t min_leaf):
    cdef const double[:, :] Xv = np.asarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const long long[::1] r = np.ascontiguousarray(rows, dtype=np.int64)
    cdef const long long[::1] feats = np.ascontiguousarray(features, dtype=np.int64)
    cdef Py_ssize_t n = r.shape[0], nf = feats.shape[0]
    cdef Py_ssize_t a, i, f
    cdef double left, right, total, score, nl
    cdef double best_score = -INFINITY, best_thr = 0.0
    cdef long long best_feat = -1
    cdef bint binary
    cdef double x
    if n < 2 * min_leaf or nf == 0:
        return -1, 0.0, -np.inf
    cdef double* key = <double*> malloc(n * sizeof(double))
    cdef double* tkey = <double*> malloc(n * sizeof(double))
    cdef long long* pos = <long long*> malloc(n * sizeof(long long))
    cdef long long* tpos = <long long*> malloc(n * sizeof(long long))
    cdef double* ysort = <double*> malloc(n * sizeof(double))
    cdef Py_ssize_t n0
    try:
        for a in range(nf):
            f = feats[a]
            binary = True
            for i in range(n):
                x = Xv[r[i], f]
                key[i] = x
                pos[i] = i
                if x != 0.0 and x != 1.0:
                    binary = False
            if binary:
                # stable partition: zeros in row order, then ones in row order
                n0 = 0
                for i in range(n):
                    if key[i] == 0.0:
                        ysort[n0] = yv[r[i]]
                        n0 += 1
                left = 0.0
                for i in range(n0):
                    left += ysort[i]
                total = left
                for i in range(n):
                    if key[i] != 0.0:
                        total += yv[r[i]]
                if n0 == 0 or n0 == n or n0 < min_leaf or n - n0 < min_leaf:
                    continue
                nl = <double> n0
                right = total - left
                score = left * left / nl + right * right / (n - nl)
                if score > best_score:
                    best_score = score
                    best_feat = f
                    best_thr = 0.5 * (0.0 + 1.0)
                continue
            _merge_sort(key, pos, tkey, tpos, 0, n)
            for i in range(n):
                ysort[i] = yv[r[pos[i]]]
            total = 0.0
            for i in range(n):
                total += ysort[i]
            left = 0.0
            for i in range(n - 1):
                left += ysort[i]
                if i + 1 < min_leaf or n - (i + 1) < min_leaf:
                    continue
                if not (key[i] < key[i + 1]):
                    continue
                nl = <double> (i + 1)
                right = total - left
                score = left * left / nl + right * right / (n - nl)
                if score > best_score:
                    best_score = score
                    best_feat = f
                    best_thr = 0.5 * (key[i] + key[i + 1])
    finally:
        free(key); free(tkey); free(pos); free(tpos); free(ysort)
    if best_feat < 0:
        return -1, 0.0, -np.inf
    return int(best_feat), float(best_thr), float(best_score)
