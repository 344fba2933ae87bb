"""Pairwise U-statistics, V-statistics and jackknife variances.

For a sample ``x`` of shape ``(n, p)`` every column pair ``(i, j)``, ``i < j``,
gets a U-statistic ``U_ij``. Pairs are linearised in vech order (the columns
of the strict upper triangle stacked one after another).

Two computation routes exist for the m = 2, 3 kernels:

* dense: sign tensors and BLAS Gram products, used while they fit in memory;
* per pair: the backend kernels (merge-sort Kendall, O(n^2) row sums).

Both are exact for the sign kernels and agree with the enumeration
oracle :func:`ustat_naive`. The order 4-6 kernels are always enumerated.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from relind import _backend
from relind.errors import DataError, ResourceCapError, UsageError
from relind.kernels import KernelId

__all__ = [
    "DEFAULT_CAP",
    "PairGrid",
    "UStatResult",
    "KendallResampler",
    "as_sample",
    "vech_index",
    "vech_unindex",
    "ustat_naive",
    "ustat_matrix",
    "vstat",
    "vstat_partition",
    "vstat_vector",
    "loo_kernel_mean",
    "loo_kernel_means",
    "jackknife_sigma2",
    "jackknife_from_q",
    "set_partitions",
    "check_vstat_cap",
]

#: maximum number of kernel evaluations per pair for enumeration routes
DEFAULT_CAP = 10**7

# dense routes are used while the sign tensor stays below this many entries
_DENSE_LIMIT = 4 * 10**7


def vech_index(i, j, p):
    """1-based linear index of the pair ``(i, j)``, ``1 <= i < j <= p``."""
    if not (1 <= i < j <= p):
        raise UsageError(f"need 1 <= i < j <= p, got i={i}, j={j}, p={p}")
    return (j - 1) * (j - 2) // 2 + i


def vech_unindex(k, p):
    """Inverse of :func:`vech_index`."""
    d = p * (p - 1) // 2
    if not (1 <= k <= d):
        raise UsageError(f"need 1 <= k <= {d}, got k={k}")
    j = 2
    while j * (j - 1) // 2 < k:
        j += 1
    i = k - (j - 1) * (j - 2) // 2
    return i, j


class PairGrid:
    """Column pairs of a p-dimensional sample in vech order.

    ``rows`` and ``cols`` hold 0-based column indices so that pair ``k``
    (0-based) is ``(rows[k], cols[k])``.
    """

    def __init__(self, p):
        if p < 2:
            raise UsageError(f"need at least two columns, got p={p}")
        self.p = int(p)
        self.d = self.p * (self.p - 1) // 2
        lo, hi = np.tril_indices(self.p, -1)
        self.rows = hi
        self.cols = lo

    def index(self, i, j):
        return vech_index(i, j, self.p)

    def pair(self, k):
        return vech_unindex(k, self.p)

    def pairs(self):
        """All 1-based pairs in vech order."""
        return list(zip((self.rows + 1).tolist(), (self.cols + 1).tolist()))

    def to_matrix(self, vec, diag=np.nan):
        out = np.full((self.p, self.p), diag, dtype=np.float64)
        out[self.rows, self.cols] = vec
        out[self.cols, self.rows] = vec
        return out

    def __len__(self):
        return self.d

    def __repr__(self):
        return f"PairGrid(p={self.p}, d={self.d})"


@dataclass
class UStatResult:
    """U-statistics of all column pairs.

    Attributes
    ----------
    kernel : KernelId
    u : ndarray of shape (d,)
        U-statistics in vech order.
    sigma2 : ndarray of shape (d,) or None
        Jackknife variance estimates, ``None`` when not requested.
    n, p : int
        Sample shape.
    """

    kernel: KernelId
    u: np.ndarray
    sigma2: np.ndarray | None
    n: int
    p: int

    @property
    def d(self):
        return len(self.u)

    @property
    def grid(self):
        return PairGrid(self.p)

    def matrix(self):
        return self.grid.to_matrix(self.u)


def as_sample(x, min_rows=1):
    """Validate a sample and return it as a C-contiguous float64 array."""
    try:
        arr = np.ascontiguousarray(x, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataError(f"sample is not numeric: {exc}") from None
    if arr.ndim != 2:
        raise DataError(f"sample must be a 2-d array, got {arr.ndim} dimensions")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise DataError(f"non-finite entry at row {bad[0] + 1}, column {bad[1] + 1}")
    if arr.shape[0] < min_rows:
        raise UsageError(f"need at least {min_rows} rows, got {arr.shape[0]}")
    return arr


def _columns(x, pair):
    i, j = pair
    p = x.shape[1]
    if not (1 <= i < j <= p):
        raise UsageError(f"pair must satisfy 1 <= i < j <= {p}, got {pair}")
    return x[:, i - 1], x[:, j - 1]


def _check_cap(count, cap, what):
    if count > cap:
        raise ResourceCapError(
            f"{what} needs {count} kernel evaluations per pair, above the cap "
            f"of {cap}; use a smaller n or the Kendall kernel"
        )


def _count_signs(col):
    """``A[k] = sum_l sign(col[k] - col[l])`` in O(n log n)."""
    s = np.sort(col)
    less = np.searchsorted(s, col, side="left")
    leq = np.searchsorted(s, col, side="right")
    return (less + leq - len(col)).astype(np.float64)


# ---------------------------------------------------------------- per pair


def _pair_stats(u, v, kernel, want_q, cap, backend):
    """U-statistic and, optionally, the leave-one-in means ``q_k`` of one pair."""
    n = len(u)
    m = kernel.order
    if kernel is KernelId.KENDALL_TAU:
        n0 = n * (n - 1) // 2
        uval = backend.kendall_num(u, v) / n0
        q = backend.kendall_rowsums(u, v) / (n - 1) if want_q else None
        return uval, q
    if kernel is KernelId.SPEARMAN_HAT:
        a = _count_signs(u)
        b = _count_signs(v)
        k_rows = backend.kendall_rowsums(u, v)
        num = float(np.dot(a, b)) - 2.0 * backend.kendall_num(u, v)
        uval = num / (2.0 * comb(n, 3))
        q = None
        if want_q:
            q = (
                a * b - 3.0 * k_rows
                - backend.sign_dot_rows(u, b) - backend.sign_dot_rows(v, a)
            ) / ((n - 1) * (n - 2))
        return uval, q
    if kernel is KernelId.COVARIANCE:
        uc = u - u.mean()
        vc = v - v.mean()
        uval = float(np.dot(uc, vc)) / (n - 1)
        q = (n * uc * vc + (n - 1) * uval) / (2.0 * (n - 1)) if want_q else None
        return uval, q
    _check_cap(comb(n, m), cap, f"{kernel.value} U-statistic")
    total, rows = backend.enum_sums(u, v, kernel.code)
    q = rows / comb(n - 1, m - 1) if want_q else None
    return total / comb(n, m), q


def ustat_naive(x, kernel, pair, cap=DEFAULT_CAP, backend=None):
    """U-statistic of one pair by enumerating all m-subsets of rows.

    Parameters
    ----------
    x : array_like, shape (n, p)
    kernel : KernelId or str
    pair : (int, int)
        1-based columns ``(i, j)`` with ``i < j``.
    cap : int
        Refuse when ``C(n, m)`` exceeds this.
    """
    kernel = KernelId.parse(kernel)
    x = as_sample(x, kernel.order)
    u, v = _columns(x, pair)
    n = x.shape[0]
    _check_cap(comb(n, kernel.order), cap, f"naive {kernel.value} U-statistic")
    total, _ = _backend.get(backend).enum_sums(u, v, kernel.code)
    return total / comb(n, kernel.order)


def loo_kernel_means(x, kernel, pair, cap=DEFAULT_CAP, backend=None):
    """All ``q_k``: mean kernel value over the subsets containing row ``k``."""
    kernel = KernelId.parse(kernel)
    x = as_sample(x, kernel.order)
    u, v = _columns(x, pair)
    _, q = _pair_stats(u, v, kernel, True, cap, _backend.get(backend))
    return q


def loo_kernel_mean(x, kernel, pair, k, cap=DEFAULT_CAP, backend=None):
    """``q_k`` for a single 1-based row ``k``."""
    n = np.shape(x)[0]
    if not (1 <= k <= n):
        raise UsageError(f"row index must lie in 1..{n}, got {k}")
    return float(loo_kernel_means(x, kernel, pair, cap, backend)[k - 1])


def jackknife_from_q(q, u, m):
    """Jackknife variance from leave-one-in means ``q`` (shape ``(n, ...)``)."""
    q = np.asarray(q, dtype=np.float64)
    n = q.shape[0]
    dev = q - u
    return m * m * (n - 1) / (n * (n - m) ** 2) * np.sum(dev * dev, axis=0)


def jackknife_sigma2(x, kernel, pair, cap=DEFAULT_CAP, backend=None):
    """Jackknife estimate of the variance of the U-statistic of one pair."""
    kernel = KernelId.parse(kernel)
    x = as_sample(x)
    if x.shape[0] <= kernel.order:
        raise UsageError(
            f"jackknife needs n > {kernel.order} rows, got n={x.shape[0]}"
        )
    u, v = _columns(x, pair)
    uval, q = _pair_stats(u, v, kernel, True, cap, _backend.get(backend))
    return float(jackknife_from_q(q, uval, kernel.order))


# ------------------------------------------------------------------- dense


def _pair_signs(x, dtype):
    """Sign rows ``sign(x[a] - x[b])`` over observation pairs ``a < b``."""
    a, b = np.triu_indices(x.shape[0], 1)
    return np.sign(x[a] - x[b]).astype(dtype, copy=False)


def _full_signs(x, dtype):
    """``out[k, l, :] = sign(x[k] - x[l])``."""
    return np.sign(x[:, None, :] - x[None, :, :]).astype(dtype, copy=False)


def _kendall_weighted_moments(signs, w, n, grid):
    """Kendall U and jackknife variance from per-row sign slabs.

    ``signs[a]`` holds the signs of row ``a`` against the kept rows and ``w``
    their multiplicities. With ``G_a`` the weighted Gram matrix of slab ``a``,
    ``S1 = sum_a w_a G_a`` and ``S2 = sum_a w_a G_a**2`` are integers held
    exactly in floating point, so the jackknife sum needs no centring pass.
    """
    dt = signs.dtype
    wv = np.asarray(w, dtype=dt)
    s1 = np.zeros((signs.shape[2],) * 2, dtype=np.float64)
    s2 = np.zeros_like(s1)
    step = max(1, (8 * 10**6) // (signs.shape[2] ** 2))
    for lo in range(0, signs.shape[0], step):
        blk = signs[lo:lo + step]
        g = np.matmul(np.swapaxes(blk * wv[None, :, None], 1, 2), blk)
        wb = wv[lo:lo + step].astype(np.float64)
        g = g.astype(np.float64)
        s1 += np.tensordot(wb, g, axes=1)
        s2 += np.tensordot(wb, g * g, axes=1)
    s1 = s1[grid.rows, grid.cols]
    s2 = s2[grid.rows, grid.cols]
    u = s1 / (n * (n - 1))
    sigma2 = 4.0 * (n * s2 - s1 * s1) / (n * n * (n - 1) * (n - 2) ** 2)
    return u, sigma2


def _gram_dtype(n):
    # float32 sums are exact while every partial sum stays below 2**24
    return np.float32 if n * n < 2**24 else np.float64


def _dense_ok(n, p):
    return n * n * p <= _DENSE_LIMIT


def _dense_stats(x, kernel, grid, want_q):
    n = x.shape[0]
    r, c = grid.rows, grid.cols
    if kernel is KernelId.COVARIANCE:
        xc = x - x.mean(axis=0)
        cov = (xc.T @ xc) / (n - 1)
        uvec = cov[r, c]
        sigma2 = None
        if want_q:
            prod = xc[:, r] * xc[:, c]
            dev = n * prod / (2.0 * (n - 1)) - uvec / 2.0
            m = 2
            sigma2 = m * m * (n - 1) / (n * (n - m) ** 2) * np.sum(dev * dev, axis=0)
        return uvec, sigma2

    dt = _gram_dtype(n)
    signs = _pair_signs(x, dt)
    num = (signs.T @ signs).astype(np.float64)[r, c]
    if kernel is KernelId.KENDALL_TAU:
        uvec = num / (n * (n - 1) // 2)
    else:
        a = np.column_stack([_count_signs(x[:, t]) for t in range(x.shape[1])])
        ga = (a.T @ a)[r, c]
        uvec = (ga - 2.0 * num) / (2.0 * comb(n, 3))
    if not want_q:
        return uvec, None

    # full antisymmetric sign tensor, one (n, p) slab per observation
    full = _full_signs(x, dt)
    if kernel is KernelId.KENDALL_TAU:
        return _kendall_weighted_moments(full, np.ones(n), n, grid)
    m = kernel.order
    af = a.astype(np.float64)
    acc = np.zeros(len(r), dtype=np.float64)
    for k in range(n):
        sk = full[k].astype(np.float64)
        kk = (sk.T @ sk)[r, c]
        t = sk.T @ af
        q = (af[k, r] * af[k, c] - 3.0 * kk - t[r, c] - t[c, r]) / ((n - 1) * (n - 2))
        dev = q - uvec
        acc += dev * dev
    sigma2 = m * m * (n - 1) / (n * (n - m) ** 2) * acc
    return uvec, sigma2


# ------------------------------------------------------------------ matrix


def ustat_matrix(x, kernel, sigma2=True, cap=DEFAULT_CAP, backend=None, route=None):
    """U-statistics (and jackknife variances) for every column pair.

    Parameters
    ----------
    x : array_like, shape (n, p)
    kernel : KernelId or str
    sigma2 : bool
        Also compute the jackknife variances.
    cap : int
        Enumeration cap for the order 4-6 kernels.
    backend : str or module, optional
        ``"compiled"`` or ``"python"``; default is the active backend.
    route : {None, "dense", "pair"}
        Force a computation route for the m = 2, 3 kernels.

    Returns
    -------
    UStatResult
    """
    kernel = KernelId.parse(kernel)
    x = as_sample(x, kernel.order)
    n, p = x.shape
    if sigma2 and n <= kernel.order:
        raise UsageError(f"jackknife needs n > {kernel.order} rows, got n={n}")
    grid = PairGrid(p)
    be = _backend.get(backend)
    simple = kernel in (KernelId.KENDALL_TAU, KernelId.SPEARMAN_HAT, KernelId.COVARIANCE)
    if route is None:
        route = "dense" if simple and (kernel is KernelId.COVARIANCE or _dense_ok(n, p)) else "pair"
    if route == "dense":
        if not simple:
            raise UsageError(f"no dense route for the {kernel.value} kernel")
        uvec, s2 = _dense_stats(x, kernel, grid, sigma2)
        return UStatResult(kernel, uvec, s2, n, p)

    if not simple:
        _check_cap(comb(n, kernel.order), cap, f"{kernel.value} U-statistic")
    if kernel is KernelId.KENDALL_TAU and not sigma2:
        uvec = be.kendall_matrix(np.ascontiguousarray(x.T), grid.rows, grid.cols)
        return UStatResult(kernel, uvec, None, n, p)
    uvec = np.empty(grid.d)
    s2 = np.empty(grid.d) if sigma2 else None
    for k, (i, j) in enumerate(zip(grid.rows, grid.cols)):
        uval, q = _pair_stats(x[:, i], x[:, j], kernel, sigma2, cap, be)
        uvec[k] = uval
        if sigma2:
            s2[k] = jackknife_from_q(q, uval, kernel.order)
    return UStatResult(kernel, uvec, s2, n, p)


# ------------------------------------------------------------- V-statistics


def set_partitions(m):
    """All set partitions of ``range(m)`` as restricted growth strings."""
    out = []

    def rec(prefix, nblocks):
        if len(prefix) == m:
            out.append(tuple(prefix))
            return
        for g in range(nblocks + 1):
            rec(prefix + [g], max(nblocks, g + 1))

    rec([], 0)
    return out


def check_vstat_cap(n, kernel, cap=DEFAULT_CAP):
    """Raise ResourceCapError if the partition expansion of one pair exceeds ``cap``."""
    kernel = KernelId.parse(kernel)
    m = kernel.order
    patterns = [pt for pt in set_partitions(m) if max(pt) + 1 < m]
    work = comb(n, m) + sum(_falling(n, max(pt) + 1) for pt in patterns)
    _check_cap(work, cap, f"{kernel.value} V-statistic")


def vstat_partition(x, kernel, pair, cap=DEFAULT_CAP, backend=None):
    """V-statistic of one pair by expanding the ``n**m`` sum over set partitions.

    Tuples with pairwise distinct indices contribute ``m! * C(n, m) * U``;
    every other equality pattern is summed over ordered distinct tuples.
    """
    kernel = KernelId.parse(kernel)
    x = as_sample(x, 1)
    u, v = _columns(x, pair)
    n = x.shape[0]
    m = kernel.order
    be = _backend.get(backend)
    patterns = [pt for pt in set_partitions(m) if max(pt) + 1 < m]
    check_vstat_cap(n, kernel, cap)
    total = 0.0
    if n >= m:
        subset_total, _ = be.enum_sums(u, v, kernel.code)
        total = _factorial(m) * subset_total
    for pt in patterns:
        total += be.pattern_sum(u, v, kernel.code, list(pt))
    return total / float(n) ** m


def _falling(n, b):
    out = 1
    for t in range(b):
        out *= n - t
    return out


def _factorial(m):
    return _falling(m, m)


def _closed_form_v(kernel, uval, n, tau=None):
    if kernel in (KernelId.KENDALL_TAU, KernelId.COVARIANCE):
        # h(x, x) = 0, so only distinct pairs contribute
        return uval * (n - 1) / n
    if kernel is KernelId.SPEARMAN_HAT:
        # each of the three two-block patterns reduces to the Kendall kernel
        return (n - 1) * ((n - 2) * uval + 3.0 * tau) / (n * n)
    raise AssertionError(kernel)


def vstat(x, kernel, pair, cap=DEFAULT_CAP, backend=None):
    """V-statistic ``n**-m * sum h`` over all index tuples, repeats included."""
    kernel = KernelId.parse(kernel)
    x = as_sample(x, 1)
    n = x.shape[0]
    if kernel in (KernelId.KENDALL_TAU, KernelId.COVARIANCE):
        if n < 2:
            return 0.0
        return float(_closed_form_v(kernel, ustat_naive_fast(x, kernel, pair, backend), n))
    if kernel is KernelId.SPEARMAN_HAT:
        if n < 3:
            return vstat_partition(x, kernel, pair, cap, backend)
        uval = ustat_naive_fast(x, kernel, pair, backend)
        tau = ustat_naive_fast(x, KernelId.KENDALL_TAU, pair, backend)
        return float(_closed_form_v(kernel, uval, n, tau))
    return vstat_partition(x, kernel, pair, cap, backend)


def ustat_naive_fast(x, kernel, pair, backend=None):
    """U-statistic of one pair through the production route."""
    kernel = KernelId.parse(kernel)
    x = as_sample(x, kernel.order)
    u, v = _columns(x, pair)
    uval, _ = _pair_stats(u, v, kernel, False, DEFAULT_CAP, _backend.get(backend))
    return float(uval)


def vstat_vector(x, kernel, uvec=None, cap=DEFAULT_CAP, backend=None):
    """V-statistics of all pairs in vech order.

    ``uvec`` may pass already computed U-statistics of ``x``.
    """
    kernel = KernelId.parse(kernel)
    x = as_sample(x, 1)
    n, p = x.shape
    if uvec is None and n >= kernel.order:
        uvec = ustat_matrix(x, kernel, sigma2=False, cap=cap, backend=backend).u
    if kernel in (KernelId.KENDALL_TAU, KernelId.COVARIANCE):
        return _closed_form_v(kernel, np.asarray(uvec), n)
    if kernel is KernelId.SPEARMAN_HAT and n >= 3:
        tau = ustat_matrix(x, KernelId.KENDALL_TAU, sigma2=False, backend=backend).u
        return _closed_form_v(kernel, np.asarray(uvec), n, tau)
    grid = PairGrid(p)
    return np.array([vstat_partition(x, kernel, pr, cap, backend) for pr in grid.pairs()])


# -------------------------------------------------------------- resampling


class KendallResampler:
    """Kendall U-statistics of bootstrap resamples via multiplicity weights.

    A resample drawing row ``k`` ``w[k]`` times has Kendall numerator
    ``sum_{k<l} w[k] w[l] s_kl,i s_kl,j`` where ``s`` are the signs of the
    original sample; rows drawn twice tie and contribute zero. One weighted
    Gram product per resample therefore replaces re-sorting every pair.
    """

    def __init__(self, x):
        x = as_sample(x, 2)
        self.n, self.p = x.shape
        self.grid = PairGrid(self.p)
        self._dtype = _gram_dtype(self.n)
        self._a, self._b = np.triu_indices(self.n, 1)
        self._signs = _pair_signs(x, self._dtype)
        self._n0 = self.n * (self.n - 1) // 2
        self._x = x
        self._full = None

    @staticmethod
    def fits(n, p):
        return n * (n - 1) // 2 * p <= _DENSE_LIMIT

    def u_star(self, idx):
        """Kendall U-statistics of the resample ``x[idx]``."""
        w = np.bincount(idx, minlength=self.n).astype(self._dtype)
        ww = w[self._a] * w[self._b]
        g = (self._signs * ww[:, None]).T @ self._signs
        return g[self.grid.rows, self.grid.cols].astype(np.float64) / self._n0

    def u_sigma2_star(self, idx):
        """Kendall U-statistics and jackknife variances of the resample ``x[idx]``.

        Copies of one original row share the same leave-one-in mean, so the
        jackknife sum runs over distinct rows weighted by multiplicity.
        """
        if self._full is None:
            self._full = _full_signs(self._x, self._dtype)
        w = np.bincount(idx, minlength=self.n)
        uniq = np.flatnonzero(w)
        su = self._full[np.ix_(uniq, uniq)]
        return _kendall_weighted_moments(su, w[uniq], self.n, self.grid)
