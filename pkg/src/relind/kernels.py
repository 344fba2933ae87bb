"""Pairwise dependence kernels.

Every kernel acts on ``m`` bivariate points ``(u_k, v_k)``, the i-th and
j-th coordinates of ``m`` observations. :func:`eval_kernel` evaluates the
defining sums literally (all argument orderings), which makes it slow for
the order 5 and 6 kernels but keeps it usable as a reference for the
reduced forms in the compiled core.

Ties follow ``sign(0) = 0``; the indicator helpers use ``<=`` in
:func:`ind_le_diff` and ``<`` in :func:`ind_block_below`.
"""

import enum
import itertools
from fractions import Fraction

from relind.errors import UsageError

__all__ = [
    "KernelId",
    "eval_kernel",
    "kernel_order",
    "kernel_bound",
    "ind_le_diff",
    "ind_block_below",
]


class KernelId(enum.Enum):
    """Kernel tags. The value is the name used on the command line."""

    COVARIANCE = "covariance"
    KENDALL_TAU = "kendall"
    SPEARMAN_HAT = "spearman"
    HOEFFDING_D = "hoeffding-d"
    BKR_R = "bkr-r"
    TAU_STAR = "tau-star"

    @property
    def order(self):
        return _ORDER[self]

    @property
    def code(self):
        """Small integer used by the compiled core."""
        return _CODE[self]

    @property
    def is_rank(self):
        return self is not KernelId.COVARIANCE

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise UsageError(f"unknown kernel {name!r}; choose from {choices}") from None


_ORDER = {
    KernelId.COVARIANCE: 2,
    KernelId.KENDALL_TAU: 2,
    KernelId.SPEARMAN_HAT: 3,
    KernelId.HOEFFDING_D: 5,
    KernelId.BKR_R: 6,
    KernelId.TAU_STAR: 4,
}

_CODE = {k: c for c, k in enumerate(KernelId)}

# prefactor applied to the integer sum over all orderings
_PREFACTOR = {
    KernelId.SPEARMAN_HAT: Fraction(1, 2),
    KernelId.HOEFFDING_D: Fraction(1, 16),
    KernelId.BKR_R: Fraction(1, 32),
    KernelId.TAU_STAR: Fraction(1, 16),
}


def kernel_order(kernel):
    """Number of observations consumed by ``kernel``."""
    return KernelId.parse(kernel).order


def kernel_bound(kernel):
    """Upper bound on ``|h|`` for the bounded kernels, ``inf`` for covariance."""
    kernel = KernelId.parse(kernel)
    if kernel is KernelId.COVARIANCE:
        return float("inf")
    if kernel is KernelId.KENDALL_TAU:
        return 1.0
    if kernel is KernelId.SPEARMAN_HAT:
        return 1.0
    n_terms = 1
    for r in range(2, kernel.order + 1):
        n_terms *= r
    return float(n_terms * _PREFACTOR[kernel])


def _sign(a):
    return (a > 0) - (a < 0)


def ind_le_diff(z, a, b, c):
    """``1{z[a] <= z[c]} - 1{z[b] <= z[c]}``."""
    return int(z[a] <= z[c]) - int(z[b] <= z[c])


def ind_block_below(z, a, b, c, d):
    """``1`` when both ``z[a]`` and ``z[b]`` lie strictly below ``z[c]`` and ``z[d]``."""
    return int(z[a] < z[c] and z[a] < z[d] and z[b] < z[c] and z[b] < z[d])


def _tau_star_factor(z, j1, j2, j3, j4):
    return (
        ind_block_below(z, j1, j3, j2, j4)
        + ind_block_below(z, j2, j4, j1, j3)
        - ind_block_below(z, j1, j4, j2, j3)
        - ind_block_below(z, j2, j3, j1, j4)
    )


def _raw_sum(kernel, u, v):
    """Integer sum over all orderings of the points (before the prefactor)."""
    m = kernel.order
    total = 0
    if kernel is KernelId.SPEARMAN_HAT:
        for a, b, c in itertools.permutations(range(m)):
            total += _sign(u[a] - u[b]) * _sign(v[a] - v[c])
    elif kernel is KernelId.HOEFFDING_D:
        for j1, j2, j3, j4, j5 in itertools.permutations(range(m)):
            total += (
                ind_le_diff(u, j1, j2, j5)
                * ind_le_diff(u, j3, j4, j5)
                * ind_le_diff(v, j1, j2, j5)
                * ind_le_diff(v, j3, j4, j5)
            )
    elif kernel is KernelId.BKR_R:
        for j1, j2, j3, j4, j5, j6 in itertools.permutations(range(m)):
            total += (
                ind_le_diff(u, j1, j2, j5)
                * ind_le_diff(u, j3, j4, j5)
                * ind_le_diff(v, j1, j2, j6)
                * ind_le_diff(v, j3, j4, j6)
            )
    elif kernel is KernelId.TAU_STAR:
        for j in itertools.permutations(range(m)):
            total += _tau_star_factor(u, *j) * _tau_star_factor(v, *j)
    else:  # pragma: no cover
        raise AssertionError(kernel)
    return total


def eval_kernel(kernel, pts):
    """Evaluate the symmetric kernel on ``m`` bivariate points.

    Parameters
    ----------
    kernel : KernelId or str
    pts : sequence of (float, float)
        Exactly ``kernel.order`` points.

    Returns
    -------
    float
        Kernel value. Sign and indicator kernels are exact: the integer sum
        over orderings is formed first and scaled once.
    """
    kernel = KernelId.parse(kernel)
    pts = [tuple(pt) for pt in pts]
    if len(pts) != kernel.order:
        raise UsageError(
            f"{kernel.value} kernel takes {kernel.order} points, got {len(pts)}"
        )
    if any(len(pt) != 2 for pt in pts):
        raise UsageError("each point must be a (u, v) pair")
    u = [float(pt[0]) for pt in pts]
    v = [float(pt[1]) for pt in pts]
    if kernel is KernelId.COVARIANCE:
        return (u[0] - u[1]) * (v[0] - v[1]) / 2.0
    if kernel is KernelId.KENDALL_TAU:
        return float(_sign(u[0] - u[1]) * _sign(v[0] - v[1]))
    return float(_raw_sum(kernel, u, v) * _PREFACTOR[kernel])
