"""Seeded data generators for the simulation study.

Correlation models
------------------
M1
    Equicorrelation: ``(1 - rho) I + rho J``.
M2
    The first ``floor(p / sqrt(2))`` components are equicorrelated, the
    rest are independent.
M3
    Only one pair of components is correlated.

Samples are multivariate normal or multivariate t with the model matrix as
scale matrix. Both are elliptical, so the Kendall tau of a pair with scale
correlation ``rho`` is ``(2 / pi) * arcsin(rho)``.

Random streams are PCG64 generators keyed by ``(seed, key...)`` through
``numpy.random.SeedSequence``; distinct keys give independent streams and
the same key always reproduces the same stream.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from relind.errors import NumericError, UsageError

__all__ = [
    "Model",
    "CorrelationModel",
    "Distribution",
    "make_rng",
    "data_rng",
    "draw_rng",
    "model_matrix",
    "m2_block_size",
    "cholesky",
    "sample",
    "tau_from_rho",
    "rho_from_tau",
    "BOUNDARY_RHO",
]

#: scale correlation whose Kendall tau is exactly 0.1
BOUNDARY_RHO = math.sin(math.pi / 20)

_JITTER_MAX = 1e-10


class Model(enum.Enum):
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise UsageError(f"unknown model {name!r}; choose from m1, m2, m3") from None


@dataclass(frozen=True)
class CorrelationModel:
    """One of the three correlation structures.

    Parameters
    ----------
    tag : Model or str
    p : int
    rho : float
    pair : (int, int)
        1-based correlated pair, used by M3 only.
    """

    tag: Model
    p: int
    rho: float
    pair: tuple = (1, 2)

    def __post_init__(self):
        object.__setattr__(self, "tag", Model.parse(self.tag))
        object.__setattr__(self, "pair", tuple(int(a) for a in self.pair))

    def matrix(self):
        return model_matrix(self)


@dataclass(frozen=True)
class Distribution:
    """``"normal"`` or ``"t"`` with ``dof`` degrees of freedom."""

    tag: str = "normal"
    dof: float = 3.0

    def __post_init__(self):
        tag = str(self.tag).lower()
        if tag in ("t3", "student-t", "studentt"):
            tag = "t"
        if tag not in ("normal", "t"):
            raise UsageError(f"unknown distribution {self.tag!r}; choose normal or t3")
        if not self.dof > 0:
            raise UsageError(f"degrees of freedom must be positive, got {self.dof}")
        object.__setattr__(self, "tag", tag)

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        s = str(name).lower()
        if s.startswith("t") and s[1:].replace(".", "", 1).isdigit():
            return cls("t", float(s[1:]))
        return cls(s)

    @property
    def label(self):
        if self.tag == "normal":
            return "normal"
        return f"t{self.dof:g}"


def make_rng(seed, *key):
    """PCG64 generator for stream ``key`` under ``seed``."""
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise UsageError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def data_rng(seed, rep):
    """Stream for the data of Monte Carlo replication ``rep``."""
    return make_rng(seed, 0, rep)


def draw_rng(seed, rep, draw):
    """Stream for bootstrap draw ``draw`` of replication ``rep``."""
    return make_rng(seed, 1, rep, draw)


def m2_block_size(p):
    """``floor(p / sqrt(2))`` computed in integers."""
    return math.isqrt(p * p // 2)


def model_matrix(model):
    """Correlation matrix of a :class:`CorrelationModel`."""
    p = int(model.p)
    rho = float(model.rho)
    if p < 2:
        raise UsageError(f"need p >= 2, got {p}")
    if not math.isfinite(rho):
        raise UsageError(f"rho must be finite, got {rho}")
    out = np.eye(p)
    if model.tag is Model.M1:
        if not (-1.0 / (p - 1) < rho < 1.0):
            raise UsageError(f"M1 needs -1/(p-1) < rho < 1, got {rho}")
        out[:] = rho
        np.fill_diagonal(out, 1.0)
    elif model.tag is Model.M2:
        if not abs(rho) < 1.0:
            raise UsageError(f"M2 needs |rho| < 1, got {rho}")
        q = m2_block_size(p)
        if rho < 0 and q > 1 and rho <= -1.0 / (q - 1):
            raise UsageError(f"M2 block of size {q} needs rho > {-1.0 / (q - 1):g}")
        out[:q, :q] = rho
        np.fill_diagonal(out, 1.0)
    else:
        if not abs(rho) < 1.0:
            raise UsageError(f"M3 needs |rho| < 1, got {rho}")
        i, j = model.pair
        if not (1 <= i <= p and 1 <= j <= p and i != j):
            raise UsageError(f"M3 pair {model.pair} is not a pair of distinct columns in 1..{p}")
        out[i - 1, j - 1] = out[j - 1, i - 1] = rho
    return out


def cholesky(sigma):
    """Lower Cholesky factor, retrying with growing diagonal jitter up to 1e-10."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise UsageError("sigma must be a square matrix")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
        raise NumericError("sigma is not symmetric")
    jitter = 0.0
    eye = np.eye(sigma.shape[0])
    while True:
        try:
            return np.linalg.cholesky(sigma + jitter * eye)
        except np.linalg.LinAlgError:
            if jitter >= _JITTER_MAX:
                raise NumericError(
                    "sigma is not positive definite even with 1e-10 diagonal jitter"
                ) from None
            jitter = _JITTER_MAX * 1e-4 if jitter == 0.0 else jitter * 10.0


def sample(dist, sigma, n, rng, chol=None):
    """Draw ``n`` rows from a centred normal or t distribution.

    Parameters
    ----------
    dist : Distribution or str
    sigma : ndarray of shape (p, p)
        Covariance (normal) or scale (t) matrix.
    n : int
    rng : numpy.random.Generator
    chol : ndarray, optional
        Precomputed lower Cholesky factor of ``sigma``.

    Returns
    -------
    ndarray of shape (n, p)
    """
    dist = Distribution.parse(dist)
    if n < 1:
        raise UsageError(f"need n >= 1, got {n}")
    lower = cholesky(sigma) if chol is None else chol
    z = rng.standard_normal((n, lower.shape[0]))
    x = z @ lower.T
    if dist.tag == "t":
        w = rng.chisquare(dist.dof, size=n)
        x /= np.sqrt(w / dist.dof)[:, None]
    return x


def tau_from_rho(rho):
    """Kendall tau of an elliptical pair with correlation ``rho``."""
    rho = float(rho)
    if not abs(rho) <= 1.0:
        raise UsageError(f"need |rho| <= 1, got {rho}")
    return 2.0 / math.pi * math.asin(rho)


def rho_from_tau(tau):
    """Inverse of :func:`tau_from_rho`."""
    tau = float(tau)
    if not abs(tau) <= 1.0:
        raise UsageError(f"need |tau| <= 1, got {tau}")
    return math.sin(math.pi * tau / 2.0)
