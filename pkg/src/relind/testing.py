"""Tests of relevant, interchanged and classical independence hypotheses.

With ``U_i`` the pairwise U-statistics and ``sigma_i`` their jackknife
standard deviations, the three statistics are

* normalized: ``max_i (U_i**2 - delta**2) / (2 * sigma_i * delta)``
* non-normalized: ``sqrt(n) * max_i (U_i**2 - delta**2)``
* absolute: ``sqrt(n) * max_i (|U_i| - delta)``

The normalized statistic has a Gumbel limit; all three can be calibrated by
the bootstrap, where resampled U-statistics are recentred at the truncated
V-statistics so that the resampling distribution sits on the null boundary.
"""

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from relind import ustat
from relind.datagen import draw_rng
from relind.errors import DegenerateVarianceError, UsageError
from relind.kernels import KernelId

__all__ = [
    "Variant",
    "Direction",
    "Method",
    "TestConfig",
    "TestReport",
    "SIGMA_FLOOR",
    "gumbel_quantile",
    "norming_constants",
    "stat_normalized_sq",
    "stat_nonnormalized_sq",
    "stat_abs",
    "asymptotic_test",
    "truncate_v",
    "resample",
    "bootstrap_test",
    "run_full_test",
]

#: jackknife standard deviations below this raise DegenerateVarianceError
SIGMA_FLOOR = 1e-12

MIN_BOOT = 20

# kernels whose V-statistic follows from U without enumeration
_CLOSED_FORM_V = (KernelId.KENDALL_TAU, KernelId.COVARIANCE, KernelId.SPEARMAN_HAT)


class _Choice(enum.Enum):
    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).lower().replace("_", "-")
        for member in cls:
            if key == member.value or key in _ALIASES.get(member, ()):
                return member
        choices = ", ".join(m.value for m in cls)
        raise UsageError(f"unknown {cls.__name__.lower()} {name!r}; choose from {choices}")


class Variant(_Choice):
    NORMALIZED_SQ = "normalized"
    NON_NORMALIZED_SQ = "nv"
    ABS = "abs"


class Direction(_Choice):
    RELEVANT = "relevant"
    INTERCHANGED = "interchanged"
    CLASSICAL = "classical"


class Method(_Choice):
    ASYMPTOTIC = "asymptotic"
    BOOTSTRAP = "bootstrap"


_ALIASES = {
    Variant.NORMALIZED_SQ: ("normalizedsq", "normalized-sq"),
    Variant.NON_NORMALIZED_SQ: ("nonnormalizedsq", "non-normalized", "nonnormalized"),
}


@dataclass(frozen=True)
class TestConfig:
    """Test settings.

    Parameters
    ----------
    delta : float
        Threshold; must be 0 for the classical direction and positive for
        the normalized statistic and the interchanged direction.
    alpha : float
        Nominal level in (0, 1).
    variant, direction, method : str or enum
    boot_reps : int
        Bootstrap replications B.
    seed : int
        Unsigned seed for the bootstrap streams.
    signed_truncation : bool
        Truncate V-statistics to ``sign(V) * delta`` instead of ``+delta``.
    studentize : bool
        Normalized variant only: divide each bootstrap draw by the jackknife
        standard deviations of its own resample. With ``False`` the
        standard deviations of the original sample are reused.
    """

    __test__ = False  # keep pytest from collecting this class

    delta: float = 0.1
    alpha: float = 0.1
    variant: Variant = Variant.NORMALIZED_SQ
    direction: Direction = Direction.RELEVANT
    method: Method = Method.BOOTSTRAP
    boot_reps: int = 100
    seed: int = 0
    signed_truncation: bool = False
    studentize: bool = True

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "variant", Variant.parse(self.variant))
        set_(self, "direction", Direction.parse(self.direction))
        set_(self, "method", Method.parse(self.method))
        set_(self, "delta", float(self.delta))
        set_(self, "alpha", float(self.alpha))
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise UsageError(f"delta must be finite and >= 0, got {self.delta}")
        if not 0.0 < self.alpha < 1.0:
            raise UsageError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.boot_reps) != self.boot_reps or self.boot_reps < 1:
            raise UsageError(f"boot_reps must be a positive integer, got {self.boot_reps}")
        set_(self, "boot_reps", int(self.boot_reps))
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise UsageError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        set_(self, "seed", int(self.seed))
        if self.direction is Direction.CLASSICAL:
            if self.delta != 0.0:
                raise UsageError("the classical direction requires delta = 0")
            if self.variant is Variant.NORMALIZED_SQ:
                raise UsageError("the classical direction needs the nv or abs variant")
            if self.method is not Method.BOOTSTRAP:
                raise UsageError("the classical direction is tested by bootstrap only")
        if self.method is Method.ASYMPTOTIC:
            if self.variant is not Variant.NORMALIZED_SQ:
                raise UsageError("the asymptotic test needs the normalized variant")
            if self.direction is not Direction.RELEVANT:
                raise UsageError("the asymptotic test covers the relevant direction only")
        if self.variant is Variant.NORMALIZED_SQ and self.delta <= 0.0:
            raise UsageError("the normalized statistic divides by delta; need delta > 0")
        if self.direction is Direction.INTERCHANGED and self.delta <= 0.0:
            raise UsageError("the interchanged direction needs delta > 0")


@dataclass
class TestReport:
    """Outcome of one test.

    Attributes
    ----------
    statistic, critical_value : float
    reject : bool
        Relevant and classical: ``statistic > critical_value``.
        Interchanged: ``statistic <= critical_value``.
    alpha, delta : float
    exceedances : list of (int, int, float)
        1-based pairs with ``|U_ij| > delta`` and their U-statistics.
    boot_draws : ndarray or None
        Sorted bootstrap statistics.
    p_value : float or None
        Informational bootstrap exceedance fraction.
    """

    __test__ = False

    statistic: float
    critical_value: float
    reject: bool
    alpha: float
    delta: float
    exceedances: list = field(default_factory=list)
    boot_draws: np.ndarray | None = None
    p_value: float | None = None
    method: str = ""
    variant: str = ""
    direction: str = ""


def gumbel_quantile(alpha):
    """``(1 - alpha)`` quantile of the standard Gumbel law."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise UsageError(f"alpha must lie in (0, 1), got {alpha}")
    return -math.log(-math.log1p(-alpha))


def norming_constants(d):
    """Gumbel norming constants ``(a_d, b_d)`` for the maximum of ``d`` terms."""
    if int(d) != d or d < 2:
        raise UsageError(f"need an integer d >= 2, got {d}")
    log_d = math.log(d)
    a = math.sqrt(2.0 * log_d)
    b = a - (math.log(log_d) + math.log(4.0 * math.pi)) / (2.0 * a)
    return a, b


def _u_of(r):
    return np.asarray(r.u if hasattr(r, "u") else r, dtype=np.float64)


def _sigma(r):
    if r.sigma2 is None:
        raise UsageError("the normalized statistic needs jackknife variances")
    sigma = np.sqrt(np.asarray(r.sigma2, dtype=np.float64))
    bad = np.flatnonzero(~(sigma >= SIGMA_FLOOR))
    if bad.size:
        p = getattr(r, "p", None) or _p_from_d(len(sigma))
        raise DegenerateVarianceError([ustat.vech_unindex(int(k) + 1, p) for k in bad], SIGMA_FLOOR)
    return sigma


def _p_from_d(d):
    p = int((1 + math.isqrt(1 + 8 * d)) // 2)
    return p


def stat_normalized_sq(r, delta):
    """``max_i (U_i**2 - delta**2) / (2 * sigma_i * delta)``."""
    delta = float(delta)
    if not delta > 0:
        raise UsageError(f"need delta > 0, got {delta}")
    u = _u_of(r)
    return float(np.max((u * u - delta * delta) / (2.0 * _sigma(r) * delta)))


def stat_nonnormalized_sq(r, delta, n):
    """``sqrt(n) * max_i (U_i**2 - delta**2)``."""
    u = _u_of(r)
    return float(math.sqrt(n) * np.max(u * u - float(delta) ** 2))


def stat_abs(r, delta, n):
    """``sqrt(n) * max_i (|U_i| - delta)``."""
    u = _u_of(r)
    return float(math.sqrt(n) * np.max(np.abs(u) - float(delta)))


def _exceedances(r, delta):
    u = r.u
    grid = ustat.PairGrid(r.p)
    idx = np.flatnonzero(np.abs(u) > delta)
    return [(int(grid.rows[k]) + 1, int(grid.cols[k]) + 1, float(u[k])) for k in idx]


def asymptotic_test(r, cfg):
    """Gumbel-calibrated test of the relevant hypothesis.

    Rejects when the normalized statistic exceeds ``q_{1-alpha} / a_d + b_d``.
    """
    if cfg.method is not Method.ASYMPTOTIC:
        raise UsageError("asymptotic_test needs method = asymptotic")
    stat = stat_normalized_sq(r, cfg.delta)
    a, b = norming_constants(len(r.u))
    crit = gumbel_quantile(cfg.alpha) / a + b
    return TestReport(
        statistic=stat,
        critical_value=crit,
        reject=bool(stat > crit),
        alpha=cfg.alpha,
        delta=cfg.delta,
        exceedances=_exceedances(r, cfg.delta),
        method=cfg.method.value,
        variant=cfg.variant.value,
        direction=cfg.direction.value,
    )


def truncate_v(v, delta, direction=Direction.RELEVANT, signed=False):
    """Truncated V-statistics used to centre the bootstrap.

    Relevant and classical: ``V`` where ``|V| <= delta``, else ``delta``.
    Interchanged: ``V`` where ``|V| > delta``, else ``delta``.
    With ``signed=True`` the replacement is ``sign(V) * delta``.
    """
    direction = Direction.parse(direction)
    v = np.asarray(v, dtype=np.float64)
    delta = float(delta)
    if delta < 0:
        raise UsageError(f"need delta >= 0, got {delta}")
    keep = np.abs(v) > delta if direction is Direction.INTERCHANGED else np.abs(v) <= delta
    repl = np.where(v < 0, -delta, delta) if signed else np.full_like(v, delta)
    return np.where(keep, v, repl)


def resample(s, rng):
    """``n`` rows drawn uniformly with replacement."""
    s = np.asarray(s)
    return s[rng.integers(0, s.shape[0], s.shape[0])]


def _crit_rank(alpha, b, direction):
    level = alpha if direction is Direction.INTERCHANGED else 1.0 - alpha
    # guard against products like 0.9 * 100 = 90.00000000000001
    return min(max(math.ceil(level * b - 1e-9), 1), b)


class _Bootstrap:
    """Bootstrap statistic for one sample under a fixed configuration."""

    def __init__(self, x, kernel, cfg, base, cap, backend):
        self.x = x
        self.kernel = kernel
        self.cfg = cfg
        self.cap = cap
        self.backend = backend
        n = x.shape[0]
        self.root_n = math.sqrt(n)
        v = ustat.vstat_vector(x, kernel, uvec=base.u, cap=cap, backend=backend)
        vd = truncate_v(v, cfg.delta, cfg.direction, cfg.signed_truncation)
        self.shift = vd - v
        self.vd = vd
        self.studentize = cfg.variant is Variant.NORMALIZED_SQ and cfg.studentize
        if cfg.variant is Variant.NORMALIZED_SQ:
            self.scale = 1.0 / (2.0 * _sigma(base) * cfg.delta)
        use_gram = kernel is KernelId.KENDALL_TAU and ustat.KendallResampler.fits(n, x.shape[1])
        self.resampler = ustat.KendallResampler(x) if use_gram else None

    def u_star(self, idx):
        if self.resampler is not None:
            return self.resampler.u_star(idx)
        r = ustat.ustat_matrix(self.x[idx], self.kernel, sigma2=False, cap=self.cap,
                               backend=self.backend)
        return r.u

    def u_sigma_star(self, idx):
        if self.resampler is not None:
            u, s2 = self.resampler.u_sigma2_star(idx)
        else:
            r = ustat.ustat_matrix(self.x[idx], self.kernel, sigma2=True, cap=self.cap,
                                   backend=self.backend)
            u, s2 = r.u, r.sigma2
        return u, _sigma(ustat.UStatResult(self.kernel, u, s2, self.x.shape[0], self.x.shape[1]))

    def draw(self, rng):
        n = self.x.shape[0]
        idx = rng.integers(0, n, n)
        variant = self.cfg.variant
        if self.studentize:
            u, sigma = self.u_sigma_star(idx)
            c = u + self.shift
            return float(np.max((c * c - self.vd * self.vd) / (2.0 * sigma * self.cfg.delta)))
        c = self.u_star(idx) + self.shift
        if variant is Variant.NORMALIZED_SQ:
            return float(np.max((c * c - self.vd * self.vd) * self.scale))
        if variant is Variant.NON_NORMALIZED_SQ:
            return float(self.root_n * np.max(c * c - self.vd * self.vd))
        return float(self.root_n * np.max(np.abs(c) - np.abs(self.vd)))


def _observed(base, cfg):
    if cfg.variant is Variant.NORMALIZED_SQ:
        return stat_normalized_sq(base, cfg.delta)
    if cfg.variant is Variant.NON_NORMALIZED_SQ:
        return stat_nonnormalized_sq(base, cfg.delta, base.n)
    return stat_abs(base, cfg.delta, base.n)


def bootstrap_test(s, kernel, cfg, rep=0, threads=1, base=None,
                   cap=ustat.DEFAULT_CAP, backend=None):
    """Bootstrap test of the relevant, interchanged or classical hypothesis.

    Parameters
    ----------
    s : array_like, shape (n, p)
    kernel : KernelId or str
    cfg : TestConfig
    rep : int
        Replication index selecting the bootstrap streams; draw ``b`` uses
        the stream keyed by ``(cfg.seed, rep, b)``.
    threads : int
        Workers for the bootstrap draws. Results do not depend on it.
    base : UStatResult, optional
        Precomputed U-statistics (with variances for the normalized variant).

    Returns
    -------
    TestReport
    """
    if cfg.method is not Method.BOOTSTRAP:
        raise UsageError("bootstrap_test needs method = bootstrap")
    if cfg.boot_reps < MIN_BOOT:
        raise UsageError(f"need at least {MIN_BOOT} bootstrap replications, got {cfg.boot_reps}")
    kernel = KernelId.parse(kernel)
    x = ustat.as_sample(s, kernel.order)
    if kernel not in _CLOSED_FORM_V:
        ustat.check_vstat_cap(x.shape[0], kernel, cap)
    want_s2 = cfg.variant is Variant.NORMALIZED_SQ
    if base is None or (want_s2 and base.sigma2 is None):
        base = ustat.ustat_matrix(x, kernel, sigma2=want_s2, cap=cap, backend=backend)
    stat = _observed(base, cfg)
    boot = _Bootstrap(x, kernel, cfg, base, cap, backend)
    B = cfg.boot_reps

    def one(b):
        return boot.draw(draw_rng(cfg.seed, rep, b))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            draws = np.array(list(pool.map(one, range(B))))
    else:
        draws = np.array([one(b) for b in range(B)])
    draws.sort()
    crit = float(draws[_crit_rank(cfg.alpha, B, cfg.direction) - 1])
    if cfg.direction is Direction.INTERCHANGED:
        reject = stat <= crit
        p_value = float(np.mean(draws <= stat))
    else:
        reject = stat > crit
        p_value = float(np.mean(draws >= stat))
    return TestReport(
        statistic=stat,
        critical_value=crit,
        reject=bool(reject),
        alpha=cfg.alpha,
        delta=cfg.delta,
        exceedances=_exceedances(base, cfg.delta),
        boot_draws=draws,
        p_value=p_value,
        method=cfg.method.value,
        variant=cfg.variant.value,
        direction=cfg.direction.value,
    )


def run_full_test(s, kernel, cfg, rep=0, threads=1, cap=ustat.DEFAULT_CAP, backend=None):
    """Dispatch to :func:`asymptotic_test` or :func:`bootstrap_test`."""
    if not isinstance(cfg, TestConfig):
        raise UsageError("cfg must be a TestConfig")
    kernel = KernelId.parse(kernel)
    if cfg.method is Method.ASYMPTOTIC:
        x = ustat.as_sample(s, kernel.order)
        r = ustat.ustat_matrix(x, kernel, sigma2=True, cap=cap, backend=backend)
        return asymptotic_test(r, cfg)
    return bootstrap_test(s, kernel, cfg, rep=rep, threads=threads, cap=cap, backend=backend)
