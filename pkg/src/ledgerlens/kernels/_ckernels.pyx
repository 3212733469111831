# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled versions of the kernels in ``_pure.py``; same contracts."""

import numpy as np
cimport numpy as cnp
from libcpp.vector cimport vector
from libc.stdint cimport int64_t, uint8_t

cnp.import_array()


def correlated_pairs(const int64_t[::1] key_ptr, const int64_t[::1] key_ids,
                     const uint8_t[::1] failed, Py_ssize_t n_keys):
    cdef Py_ssize_t n = key_ptr.shape[0] - 1
    cdef Py_ssize_t y, j, k, t, x
    cdef Py_ssize_t nnz = key_ids.shape[0]

    # Occurrence lists per key (all txs / failed txs), in increasing tx order.
    cdef vector[int64_t] occ_ptr = vector[int64_t](n_keys + 1, 0)
    cdef vector[int64_t] focc_ptr = vector[int64_t](n_keys + 1, 0)
    for y in range(n):
        for j in range(key_ptr[y], key_ptr[y + 1]):
            occ_ptr[key_ids[j] + 1] += 1
            if failed[y]:
                focc_ptr[key_ids[j] + 1] += 1
    for k in range(n_keys):
        occ_ptr[k + 1] += occ_ptr[k]
        focc_ptr[k + 1] += focc_ptr[k]
    cdef vector[int64_t] occ = vector[int64_t](nnz, 0)
    cdef vector[int64_t] focc = vector[int64_t](focc_ptr[n_keys], 0)
    cdef vector[int64_t] fill = vector[int64_t](n_keys, 0)
    cdef vector[int64_t] ffill = vector[int64_t](n_keys, 0)
    for y in range(n):
        for j in range(key_ptr[y], key_ptr[y + 1]):
            k = key_ids[j]
            occ[occ_ptr[k] + fill[k]] = y
            fill[k] += 1
            if failed[y]:
                focc[focc_ptr[k] + ffill[k]] = y
                ffill[k] += 1

    # cursor[k]: how many occurrences of key k precede the current y.
    cdef vector[int64_t] cursor = vector[int64_t](n_keys, 0)
    cdef vector[int64_t] fcursor = vector[int64_t](n_keys, 0)
    cdef vector[int64_t] stamp = vector[int64_t](n, -1)
    cdef vector[int64_t] out_x
    cdef vector[int64_t] out_y
    for y in range(n):
        for j in range(key_ptr[y], key_ptr[y + 1]):
            k = key_ids[j]
            if failed[y]:
                for t in range(occ_ptr[k], occ_ptr[k] + cursor[k]):
                    x = occ[t]
                    if stamp[x] != y:
                        stamp[x] = y
                        out_x.push_back(x)
                        out_y.push_back(y)
            else:
                for t in range(focc_ptr[k], focc_ptr[k] + fcursor[k]):
                    x = focc[t]
                    if stamp[x] != y:
                        stamp[x] = y
                        out_x.push_back(x)
                        out_y.push_back(y)
        for j in range(key_ptr[y], key_ptr[y + 1]):
            k = key_ids[j]
            cursor[k] += 1
            if failed[y]:
                fcursor[k] += 1

    cdef Py_ssize_t m = out_x.size()
    xs = np.empty(m, dtype=np.int64)
    ys = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] xv = xs
    cdef int64_t[::1] yv = ys
    for t in range(m):
        xv[t] = out_x[t]
        yv[t] = out_y[t]
    order = np.lexsort((ys, xs))
    return xs[order], ys[order]


def pair_flags(const int64_t[::1] xs, const int64_t[::1] ys,
               const int64_t[::1] w_ptr, const int64_t[::1] w_ids,
               const int64_t[::1] r_ptr, const int64_t[::1] r_ids):
    cdef Py_ssize_t m = xs.shape[0]
    out = np.zeros(m, dtype=np.uint8)
    cdef uint8_t[::1] ov = out
    cdef Py_ssize_t i, a, b
    cdef int64_t x, y, kx
    cdef bint disjoint, feeds
    for i in range(m):
        x = xs[i]
        y = ys[i]
        disjoint = True
        feeds = False
        for a in range(w_ptr[x], w_ptr[x + 1]):
            kx = w_ids[a]
            if disjoint:
                for b in range(w_ptr[y], w_ptr[y + 1]):
                    if w_ids[b] == kx:
                        disjoint = False
                        break
            if not feeds:
                for b in range(r_ptr[y], r_ptr[y + 1]):
                    if r_ids[b] == kx:
                        feeds = True
                        break
        ov[i] = (1 if disjoint else 0) | (2 if feeds else 0)
    return out
