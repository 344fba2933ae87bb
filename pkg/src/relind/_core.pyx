# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same contract as ``relind._fallback``."""

import numpy as np

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

NAME = "compiled"

SCALE = (0.5, 1.0, 0.5, 0.5, 0.25, 0.5)
ORDER = (2, 2, 3, 5, 6, 4)

cdef int[3][4] PAIRINGS4 = [[0, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2]]


cdef inline int _sign(double a) noexcept nogil:
    return (a > 0) - (a < 0)


cdef inline int _phi(const double* z, int a, int b, int c) noexcept nogil:
    return (z[a] <= z[c]) - (z[b] <= z[c])


cdef inline int _split(const double* z, int a, int b, int c, int d) noexcept nogil:
    cdef double lo1 = z[a] if z[a] < z[b] else z[b]
    cdef double hi1 = z[b] if z[a] < z[b] else z[a]
    cdef double lo2 = z[c] if z[c] < z[d] else z[d]
    cdef double hi2 = z[d] if z[c] < z[d] else z[c]
    return (hi1 < lo2) + (hi2 < lo1)


cdef double knum(int code, const double* u, const double* v) noexcept nogil:
    cdef int total = 0
    cdef int e, f, k, t, a, b, c, d, nr
    cdef int rest[4]
    cdef int fu[3]
    cdef int fv[3]
    if code == 0:
        return (u[0] - u[1]) * (v[0] - v[1])
    if code == 1:
        return _sign(u[0] - u[1]) * _sign(v[0] - v[1])
    if code == 2:
        total = (_sign(u[0] - u[1]) * _sign(v[0] - v[2])
                 + _sign(u[0] - u[2]) * _sign(v[0] - v[1])
                 + _sign(u[1] - u[0]) * _sign(v[1] - v[2])
                 + _sign(u[1] - u[2]) * _sign(v[1] - v[0])
                 + _sign(u[2] - u[0]) * _sign(v[2] - v[1])
                 + _sign(u[2] - u[1]) * _sign(v[2] - v[0]))
        return total
    if code == 3:
        for e in range(5):
            nr = 0
            for k in range(5):
                if k != e:
                    rest[nr] = k
                    nr += 1
            for t in range(3):
                a = rest[PAIRINGS4[t][0]]
                b = rest[PAIRINGS4[t][1]]
                c = rest[PAIRINGS4[t][2]]
                d = rest[PAIRINGS4[t][3]]
                total += (_phi(u, a, b, e) * _phi(u, c, d, e)
                          * _phi(v, a, b, e) * _phi(v, c, d, e))
        return total
    if code == 4:
        for e in range(6):
            for f in range(6):
                if f == e:
                    continue
                nr = 0
                for k in range(6):
                    if k != e and k != f:
                        rest[nr] = k
                        nr += 1
                for t in range(3):
                    a = rest[PAIRINGS4[t][0]]
                    b = rest[PAIRINGS4[t][1]]
                    c = rest[PAIRINGS4[t][2]]
                    d = rest[PAIRINGS4[t][3]]
                    total += (_phi(u, a, b, e) * _phi(u, c, d, e)
                              * _phi(v, a, b, f) * _phi(v, c, d, f))
        return total
    if code == 5:
        for t in range(3):
            fu[t] = _split(u, PAIRINGS4[t][0], PAIRINGS4[t][1], PAIRINGS4[t][2], PAIRINGS4[t][3])
            fv[t] = _split(v, PAIRINGS4[t][0], PAIRINGS4[t][1], PAIRINGS4[t][2], PAIRINGS4[t][3])
        total = ((fu[1] - fu[2]) * (fv[1] - fv[2])
                 + (fu[0] - fu[2]) * (fv[0] - fv[2])
                 + (fu[0] - fu[1]) * (fv[0] - fv[1]))
        return total
    return 0


def _check_code(int code):
    if code < 0 or code > 5:
        raise ValueError(f"unknown kernel code {code}")


def kernel_num(int code, u, v):
    _check_code(code)
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    if uu.shape[0] < ORDER[code] or vv.shape[0] < ORDER[code]:
        raise ValueError("too few points for kernel")
    return knum(code, &uu[0], &vv[0])


def kernel_value(int code, u, v):
    return kernel_num(code, u, v) * SCALE[code]


def enum_sums(u, v, int code):
    _check_code(code)
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0]
    cdef int m = ORDER[code]
    rows_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] rows = rows_arr
    cdef double total = 0.0
    cdef double h
    cdef int c[6]
    cdef double pu[6]
    cdef double pv[6]
    cdef int t, pos
    if n < m:
        return 0.0, rows_arr
    with nogil:
        for t in range(m):
            c[t] = t
        while True:
            for t in range(m):
                pu[t] = uu[c[t]]
                pv[t] = vv[c[t]]
            h = knum(code, pu, pv)
            total += h
            for t in range(m):
                rows[c[t]] += h
            # next combination in lexicographic order
            pos = m - 1
            while pos >= 0 and c[pos] == n - m + pos:
                pos -= 1
            if pos < 0:
                break
            c[pos] += 1
            for t in range(pos + 1, m):
                c[t] = c[t - 1] + 1
    scale = SCALE[code]
    return total * scale, rows_arr * scale


cdef void _pattern_rec(int code, const double* u, const double* v, Py_ssize_t n,
                       const int* pattern, int m, int b, int depth,
                       int* chosen, char* used, double* pu, double* pv,
                       double* acc) noexcept nogil:
    # flat accumulation keeps the summation order of the Python fallback
    cdef Py_ssize_t l
    cdef int t
    if depth == b:
        for t in range(m):
            pu[t] = u[chosen[pattern[t]]]
            pv[t] = v[chosen[pattern[t]]]
        acc[0] += knum(code, pu, pv)
        return
    for l in range(n):
        if used[l]:
            continue
        used[l] = 1
        chosen[depth] = <int>l
        _pattern_rec(code, u, v, n, pattern, m, b, depth + 1,
                     chosen, used, pu, pv, acc)
        used[l] = 0


def pattern_sum(u, v, int code, pattern):
    _check_code(code)
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0]
    cdef int m = ORDER[code]
    if len(pattern) != m:
        raise ValueError("pattern length must equal the kernel order")
    cdef int pat[6]
    cdef int t
    for t in range(m):
        pat[t] = int(pattern[t])
    cdef int b = max(pattern) + 1
    if b > n:
        return 0.0
    cdef int chosen[6]
    cdef double pu[6]
    cdef double pv[6]
    cdef char* used = <char*>malloc(n)
    if used == NULL:
        raise MemoryError()
    cdef double total = 0.0
    try:
        for t in range(n):
            used[t] = 0
        with nogil:
            _pattern_rec(code, &uu[0], &vv[0], n, pat, m, b, 0,
                         chosen, used, pu, pv, &total)
    finally:
        free(used)
    return total * SCALE[code]


cdef long long _merge_count(double* a, double* buf, Py_ssize_t n) noexcept nogil:
    """Bottom-up merge sort of ``a``; returns the number of strict inversions."""
    cdef long long swaps = 0
    cdef Py_ssize_t width = 1, lo, mid, hi, i, j, k
    cdef double* src = a
    cdef double* dst = buf
    cdef double* tmp
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            if mid > n:
                mid = n
            hi = lo + 2 * width
            if hi > n:
                hi = n
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    swaps += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
            lo += 2 * width
        tmp = src
        src = dst
        dst = tmp
        width *= 2
    if src != a:
        memcpy(a, src, n * sizeof(double))
    return swaps


cdef long long _tie_pairs_sorted(const double* a, Py_ssize_t n) noexcept nogil:
    cdef long long total = 0, run = 1
    cdef Py_ssize_t k
    for k in range(1, n):
        if a[k] == a[k - 1]:
            run += 1
        else:
            total += run * (run - 1) / 2
            run = 1
    return total + run * (run - 1) / 2


cdef long long _kendall_sorted(const double* us, double* vb, double* buf,
                               Py_ssize_t n, long long ties_u) noexcept nogil:
    """Kendall numerator given ``us`` ascending and ``vb`` aligned with it.

    Sorts ``v`` inside each run of tied ``u`` (insertion sort), counts joint
    ties, then counts inversions by merge sort. ``vb`` is clobbered.
    """
    cdef long long n0 = n * (n - 1) / 2
    cdef long long joint = 0, run, swaps, ties_v
    cdef Py_ssize_t start = 0, end, a, b
    cdef double key
    while start < n:
        end = start + 1
        while end < n and us[end] == us[start]:
            end += 1
        if end - start > 1:
            for a in range(start + 1, end):
                key = vb[a]
                b = a - 1
                while b >= start and vb[b] > key:
                    vb[b + 1] = vb[b]
                    b -= 1
                vb[b + 1] = key
            run = 1
            for a in range(start + 1, end):
                if vb[a] == vb[a - 1]:
                    run += 1
                else:
                    joint += run * (run - 1) / 2
                    run = 1
            joint += run * (run - 1) / 2
        start = end
    swaps = _merge_count(vb, buf, n)
    ties_v = _tie_pairs_sorted(vb, n)
    return n0 - ties_u - ties_v + joint - 2 * swaps


def kendall_num(u, v):
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0]
    if n < 2:
        return 0
    order = np.argsort(uu, kind="stable")
    cdef double[::1] us = np.ascontiguousarray(np.asarray(uu)[order])
    cdef double[::1] vb = np.ascontiguousarray(np.asarray(vv)[order])
    cdef double[::1] buf = np.empty(n, dtype=np.float64)
    cdef long long ties_u = _tie_pairs_sorted(&us[0], n)
    cdef long long res
    with nogil:
        res = _kendall_sorted(&us[0], &vb[0], &buf[0], n, ties_u)
    return res


def kendall_matrix(xt, rows, cols):
    """Kendall tau for column pairs ``(rows[k], cols[k])`` of ``xt`` (p x n)."""
    cdef double[:, ::1] x = np.ascontiguousarray(xt, dtype=np.float64)
    cdef Py_ssize_t p = x.shape[0], n = x.shape[1]
    cdef long long[::1] ri = np.ascontiguousarray(rows, dtype=np.int64)
    cdef long long[::1] ci = np.ascontiguousarray(cols, dtype=np.int64)
    cdef Py_ssize_t npairs = ri.shape[0]
    out_arr = np.empty(npairs, dtype=np.float64)
    cdef double[::1] out = out_arr
    if n < 2:
        out_arr[:] = np.nan
        return out_arr
    cdef long long[:, ::1] order = np.ascontiguousarray(
        np.argsort(np.asarray(x), axis=1, kind="stable"), dtype=np.int64)
    cdef double[:, ::1] xs = np.take_along_axis(np.asarray(x), np.asarray(order), axis=1)
    cdef long long[::1] ties = np.empty(p, dtype=np.int64)
    cdef double[::1] vb = np.empty(n, dtype=np.float64)
    cdef double[::1] buf = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t q, k, i, j
    cdef double n0 = n * (n - 1) / 2.0
    with nogil:
        for i in range(p):
            ties[i] = _tie_pairs_sorted(&xs[i, 0], n)
        for q in range(npairs):
            i = ri[q]
            j = ci[q]
            for k in range(n):
                vb[k] = x[j, order[i, k]]
            out[q] = _kendall_sorted(&xs[i, 0], &vb[0], &buf[0], n, ties[i]) / n0
    return out_arr


def kendall_rowsums(u, v):
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0], k, l
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef long long acc
    with nogil:
        for k in range(n):
            acc = 0
            for l in range(n):
                acc += _sign(uu[k] - uu[l]) * _sign(vv[k] - vv[l])
            out[k] = acc
    return out_arr


def sign_dot_rows(u, b):
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] bb = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0], k, l
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc
    with nogil:
        for k in range(n):
            acc = 0.0
            for l in range(n):
                acc += _sign(uu[k] - uu[l]) * bb[l]
            out[k] = acc
    return out_arr
