"""Pure Python implementations of the core kernels.

Mirrors ``relind._core`` function for function. Used when the compiled
extension is unavailable or ``RELIND_PURE_PYTHON=1`` is set.

Kernel codes follow :class:`relind.kernels.KernelId` order: 0 covariance,
1 Kendall, 2 Spearman, 3 Hoeffding D, 4 BKR R, 5 tau*. The order 4-6
kernels are evaluated in reduced form: the sum over all orderings collapses
onto a few representatives because each summand is invariant under a
subgroup of the argument permutations.
"""

import itertools

import numpy as np

NAME = "python"

#: multiplier turning the integer numerator into the kernel value
SCALE = (0.5, 1.0, 0.5, 0.5, 0.25, 0.5)
ORDER = (2, 2, 3, 5, 6, 4)

# three ways to split four slots into two pairs
_PAIRINGS4 = ((0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2))


def _sign(a):
    return (a > 0) - (a < 0)


def _phi(z, a, b, c):
    return (z[a] <= z[c]) - (z[b] <= z[c])


def _split(z, a, b, c, d):
    # [max(a,b) < min(c,d)] + [max(c,d) < min(a,b)]
    lo1, hi1 = min(z[a], z[b]), max(z[a], z[b])
    lo2, hi2 = min(z[c], z[d]), max(z[c], z[d])
    return int(hi1 < lo2) + int(hi2 < lo1)


def kernel_num(code, u, v):
    """Integer numerator of the kernel at points ``(u[k], v[k])``.

    For covariance the "numerator" is the real product
    ``(u0 - u1) * (v0 - v1)``.
    """
    if code == 0:
        return (u[0] - u[1]) * (v[0] - v[1])
    if code == 1:
        return _sign(u[0] - u[1]) * _sign(v[0] - v[1])
    if code == 2:
        total = 0
        for a, b, c in ((0, 1, 2), (1, 0, 2), (2, 0, 1)):
            total += _sign(u[a] - u[b]) * _sign(v[a] - v[c])
            total += _sign(u[a] - u[c]) * _sign(v[a] - v[b])
        return total
    if code == 3:
        total = 0
        for e in range(5):
            rest = [k for k in range(5) if k != e]
            for p in _PAIRINGS4:
                a, b, c, d = (rest[t] for t in p)
                total += (
                    _phi(u, a, b, e) * _phi(u, c, d, e)
                    * _phi(v, a, b, e) * _phi(v, c, d, e)
                )
        return total
    if code == 4:
        total = 0
        for e in range(6):
            for f in range(6):
                if f == e:
                    continue
                rest = [k for k in range(6) if k != e and k != f]
                for p in _PAIRINGS4:
                    a, b, c, d = (rest[t] for t in p)
                    total += (
                        _phi(u, a, b, e) * _phi(u, c, d, e)
                        * _phi(v, a, b, f) * _phi(v, c, d, f)
                    )
        return total
    if code == 5:
        fu = [_split(u, *p) for p in _PAIRINGS4]
        fv = [_split(v, *p) for p in _PAIRINGS4]
        return (
            (fu[1] - fu[2]) * (fv[1] - fv[2])
            + (fu[0] - fu[2]) * (fv[0] - fv[2])
            + (fu[0] - fu[1]) * (fv[0] - fv[1])
        )
    raise ValueError(f"unknown kernel code {code}")


def kernel_value(code, u, v):
    return kernel_num(code, [float(a) for a in u], [float(a) for a in v]) * SCALE[code]


def enum_sums(u, v, code):
    """Sum of the kernel over all m-subsets of rows.

    Returns
    -------
    total : float
        Sum over all subsets.
    rows : ndarray of shape (n,)
        ``rows[k]`` is the sum over the subsets containing row ``k``.
    """
    u = [float(a) for a in u]
    v = [float(a) for a in v]
    n = len(u)
    m = ORDER[code]
    total = 0
    rows = [0] * n
    for comb in itertools.combinations(range(n), m):
        h = kernel_num(code, [u[k] for k in comb], [v[k] for k in comb])
        total += h
        for k in comb:
            rows[k] += h
    scale = SCALE[code]
    return total * scale, np.array(rows, dtype=np.float64) * scale


def pattern_sum(u, v, code, pattern):
    """Sum of ``h(X[l[pattern[0]]], ..., X[l[pattern[m-1]]])`` over distinct ``l``.

    ``pattern`` assigns each kernel slot a block label in ``0..b-1``; the
    sum runs over all ordered b-tuples of distinct row indices.
    """
    u = [float(a) for a in u]
    v = [float(a) for a in v]
    n = len(u)
    b = max(pattern) + 1
    total = 0
    for tup in itertools.permutations(range(n), b):
        idx = [tup[g] for g in pattern]
        total += kernel_num(code, [u[k] for k in idx], [v[k] for k in idx])
    return total * SCALE[code]


def _tie_pairs(vals):
    """Number of tied pairs in an already sorted sequence."""
    total = 0
    run = 1
    for a, b in zip(vals, vals[1:]):
        if a == b:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    return total + run * (run - 1) // 2


def _count_inversions(seq):
    """Sort ``seq`` in place by bottom-up merge sort; return strict inversions."""
    n = len(seq)
    buf = [0.0] * n
    swaps = 0
    width = 1
    src, dst = seq, buf
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
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
        src, dst = dst, src
        width *= 2
    if src is not seq:
        seq[:] = src
    return swaps


def kendall_num(u, v):
    """Sum of ``sign(u_k - u_l) * sign(v_k - v_l)`` over pairs ``k < l``.

    O(n log n): sort by ``(u, v)``, count strict inversions of ``v`` by
    merge sort and correct for ties.
    """
    u = [float(a) for a in u]
    v = [float(a) for a in v]
    n = len(u)
    order = sorted(range(n), key=lambda k: (u[k], v[k]))
    us = [u[k] for k in order]
    vs = [v[k] for k in order]
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(us)
    n3 = _tie_pairs(list(zip(us, vs)))
    swaps = _count_inversions(vs)
    n2 = _tie_pairs(vs)
    return n0 - n1 - n2 + n3 - 2 * swaps


def kendall_matrix(xt, rows, cols):
    """Kendall tau for each column pair ``(rows[k], cols[k])`` of ``xt`` (p x n)."""
    n = xt.shape[1]
    n0 = n * (n - 1) // 2
    out = np.empty(len(rows), dtype=np.float64)
    cols_py = [list(map(float, c)) for c in xt]
    for k, (i, j) in enumerate(zip(rows, cols)):
        out[k] = kendall_num(cols_py[i], cols_py[j]) / n0
    return out


def kendall_rowsums(u, v):
    """``K[k] = sum_l sign(u_k - u_l) * sign(v_k - v_l)``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    su = np.sign(u[:, None] - u[None, :])
    sv = np.sign(v[:, None] - v[None, :])
    return (su * sv).sum(axis=1)


def sign_dot_rows(u, b):
    """``out[k] = sum_l sign(u_k - u_l) * b[l]``."""
    u = np.asarray(u, dtype=np.float64)
    return np.sign(u[:, None] - u[None, :]) @ np.asarray(b, dtype=np.float64)
