"""Binomial, hypergeometric and normal primitives.

Probabilities are evaluated in log space and exponentiated at the end.  Tail
probabilities are always summed directly over the requested tail, never
obtained as ``1 - cdf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "BinomialSample",
    "log_binom_coeff",
    "binom_pmf",
    "binom_pmf_vector",
    "binom_cdf",
    "binom_sf",
    "binom_tails",
    "hypergeom_support",
    "hypergeom_pmf",
    "normal_cdf",
    "normal_quantile",
]

# Above this many factors, log C(n, k) switches from exact integers to lgamma.
_EXACT_COMB_LIMIT = 2000


@dataclass(frozen=True)
class BinomialSample:
    """Observed binomial data: ``x`` successes out of ``n`` trials."""

    n: int
    x: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.x <= self.n:
            raise DomainError(f"x must lie in [0, {self.n}], got {self.x}")

    @property
    def p_hat(self) -> float:
        return self.x / self.n

    def mirrored(self) -> BinomialSample:
        """The sample with successes and failures exchanged."""
        return BinomialSample(self.n, self.n - self.x)


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")


def log_binom_coeff(n: int, k: int) -> float:
    """Natural log of the binomial coefficient C(n, k)."""
    if n < 0 or not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    m = min(k, n - k)
    if m <= _EXACT_COMB_LIMIT:
        # math.log on a Python int is correctly rounded, whatever its size.
        return math.log(math.comb(n, m))
    return math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)


@lru_cache(maxsize=256)
def _log_coeff_row(n: int) -> np.ndarray:
    row = np.array([log_binom_coeff(n, k) for k in range(n + 1)])
    row.setflags(write=False)
    return row


def binom_pmf(n: int, p: float, k: int) -> float:
    """P(Bin(n, p) = k), with the convention 0**0 = 1 at p in {0, 1}."""
    if not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    _check_p(p)
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    log_pmf = log_binom_coeff(n, k) + k * math.log(p) + (n - k) * math.log1p(-p)
    return math.exp(log_pmf)


def binom_pmf_vector(n: int, p) -> np.ndarray:
    """Binomial pmf over the full support k = 0..n.

    ``p`` may be a scalar (result shape ``(n + 1,)``) or a 1-d array of
    probabilities (result shape ``(len(p), n + 1)``).
    """
    p_arr = np.asarray(p, dtype=float)
    scalar = p_arr.ndim == 0
    p_arr = np.atleast_1d(p_arr)
    if np.any((p_arr < 0.0) | (p_arr > 1.0)):
        raise DomainError("p must lie in [0, 1]")
    k = np.arange(n + 1)
    out = np.empty((p_arr.size, n + 1))
    inner = (p_arr > 0.0) & (p_arr < 1.0)
    if np.any(inner):
        pi = p_arr[inner][:, None]
        with np.errstate(under="ignore"):
            out[inner] = np.exp(_log_coeff_row(n) + k * np.log(pi) + (n - k) * np.log1p(-pi))
    edge_zero = p_arr == 0.0
    edge_one = p_arr == 1.0
    out[edge_zero] = 0.0
    out[edge_zero, 0] = 1.0
    out[edge_one] = 0.0
    out[edge_one, n] = 1.0
    return out[0] if scalar else out


def binom_cdf(n: int, p: float, k: int) -> float:
    """P(Bin(n, p) <= k); ``k = -1`` gives the empty sum 0."""
    if not -1 <= k <= n:
        raise DomainError(f"need -1 <= k <= n, got n={n}, k={k}")
    _check_p(p)
    if k < 0:
        return 0.0
    return min(1.0, math.fsum(binom_pmf_vector(n, p)[: k + 1]))


def binom_sf(n: int, p: float, k: int) -> float:
    """P(Bin(n, p) > k), summed directly over the upper tail."""
    if not -1 <= k <= n:
        raise DomainError(f"need -1 <= k <= n, got n={n}, k={k}")
    _check_p(p)
    return min(1.0, math.fsum(binom_pmf_vector(n, p)[k + 1 :]))


def binom_tails(n: int, x: int, p) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(P(X < x), P(X = x), P(X > x))`` for X ~ Bin(n, p).

    Vectorized over ``p``; each piece is summed directly from pmf terms.
    """
    if not 0 <= x <= n:
        raise DomainError(f"need 0 <= x <= n, got n={n}, x={x}")
    pmf = binom_pmf_vector(n, p)
    below = pmf[..., :x].sum(axis=-1)
    at = pmf[..., x]
    above = pmf[..., x + 1 :].sum(axis=-1)
    return below, at, above


def hypergeom_support(n: int, x: int, n1: int) -> range:
    """Possible success counts in a subsample of size ``n1`` drawn from ``n``
    trials containing ``x`` successes."""
    _check_hypergeom_args(n, x, n1)
    return range(max(0, x - (n - n1)), min(x, n1) + 1)


def _check_hypergeom_args(n: int, x: int, n1: int) -> None:
    if not 0 <= x <= n:
        raise DomainError(f"need 0 <= x <= n, got n={n}, x={x}")
    if not 1 <= n1 <= n - 1:
        raise DomainError(f"need 1 <= n1 <= n - 1, got n={n}, n1={n1}")


def hypergeom_pmf(n: int, x: int, n1: int, z: int) -> float:
    """Hypergeometric(n, x, n1) probability of ``z`` successes in the subsample.

    Evaluated as an exact integer ratio; returns 0 outside the support.
    """
    _check_hypergeom_args(n, x, n1)
    if z not in hypergeom_support(n, x, n1):
        return 0.0
    # int / int is correctly rounded in Python regardless of magnitude.
    return math.comb(x, z) * math.comb(n - x, n1 - z) / math.comb(n, n1)


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# Acklam's rational approximation, relative error about 1.15e-9 before refinement.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(q: float) -> float:
    if q < _P_LOW:
        t = math.sqrt(-2.0 * math.log(q))
        num = ((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]
        return num / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0)
    r = q - 0.5
    s = r * r
    num = (((((_A[0] * s + _A[1]) * s + _A[2]) * s + _A[3]) * s + _A[4]) * s + _A[5]) * r
    return num / (((((_B[0] * s + _B[1]) * s + _B[2]) * s + _B[3]) * s + _B[4]) * s + 1.0)


def normal_quantile(q: float) -> float:
    """Inverse of the standard normal cdf.

    Acklam's approximation followed by one Halley step against the
    erfc-based cdf.  Upper-tail arguments are reflected so that the
    refinement always works on the smaller tail probability.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    if q > 0.5:
        return -normal_quantile(1.0 - q)
    if q == 0.5:
        return 0.0
    z = _acklam(q)
    err = normal_cdf(z) - q
    u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * z * z)
    return z - u / (1.0 + 0.5 * z * u)
