"""Exact coverage, expected length and randomization-range computations.

Randomization is integrated out analytically rather than simulated:

* split sample Wilson: sum over the hypergeometric law of Z given X;
* uniform-noise Wilson: Lebesgue measure of the covering noise values, using
  the fact that the Wilson interval contains p exactly when the effective
  count lies strictly inside np +/- z sqrt(np(1-p));
* Stevens: length of the covering nu1 interval, read off the tail equations;
* Korn and the data-randomized noise interval: the number of permutation
  ranks k = 1..C(n, x) falling in the same covering set.

Coverage is for the open interval (lower, upper).  At p = 0 and p = 1 it is
therefore 0 for every method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .dist import BinomialSample, binom_pmf_vector, hypergeom_pmf, hypergeom_support
from .errors import DomainError
from .intervals import (
    Method,
    MethodSpec,
    _wilson_arrays,
    clopper_pearson,
    mid_p,
    split_sample_sizes,
    split_tilde_x,
    stevens_bounds,
    wilson,
    z_value,
)

__all__ = [
    "EvaluationPoint",
    "BoundRange",
    "DEFAULT_NODES",
    "EXACT_RANK_LIMIT",
    "p_grid",
    "coverage_given_x",
    "conditional_coverage",
    "coverage",
    "conditional_expected_length",
    "conditional_lengths",
    "expected_length",
    "evaluate",
    "upper_bound_range",
    "distinct_value_count",
]

DEFAULT_NODES = 256
# Rank-based methods are averaged exactly over k = 1..C(n, x) up to this many ranks.
EXACT_RANK_LIMIT = 10**6
# Above this, k / C(n, x) cannot be represented exactly in a double.
_FLOAT_EXACT_INT = 2**53


@dataclass(frozen=True)
class EvaluationPoint:
    p: float
    coverage: float
    expected_length: float


@dataclass(frozen=True)
class BoundRange:
    min_upper: float
    max_upper: float

    def __post_init__(self) -> None:
        if self.min_upper > self.max_upper:
            raise DomainError("min_upper exceeds max_upper")

    @property
    def range(self) -> float:
        return self.max_upper - self.min_upper


def p_grid(start: float = 0.001, stop: float = 0.999, points: int = 999) -> np.ndarray:
    if points < 1 or not 0.0 <= start <= stop <= 1.0:
        raise DomainError(f"bad grid ({start}, {stop}, {points})")
    return np.linspace(start, stop, points)


def _check(n: int, p: float | None = None, x: int | None = None) -> None:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if x is not None and not 0 <= x <= n:
        raise DomainError(f"x must lie in [0, {n}], got {x}")
    if p is not None and not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")


# Cached per-(n, alpha) tables of interval bounds.


@lru_cache(maxsize=64)
def _deterministic_table(method: Method, n: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    if method is Method.WILSON:
        ivs = [wilson(n, x, alpha) for x in range(n + 1)]
    elif method is Method.CLOPPER_PEARSON:
        ivs = [clopper_pearson(BinomialSample(n, x), alpha) for x in range(n + 1)]
    else:
        ivs = [mid_p(BinomialSample(n, x), alpha) for x in range(n + 1)]
    return np.array([iv.lower for iv in ivs]), np.array([iv.upper for iv in ivs])


@lru_cache(maxsize=64)
def _split_table(n: int, alpha: float) -> tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]:
    """Per x: (hypergeometric weights, lower bounds, upper bounds) over the support of Z."""
    design = split_sample_sizes(n)
    z_crit = z_value(alpha)
    rows = []
    for x in range(n + 1):
        sample = BinomialSample(n, x)
        support = hypergeom_support(n, x, design.n1)
        weights = np.array([hypergeom_pmf(n, x, design.n1, z) for z in support])
        x_eff = np.array([split_tilde_x(sample, design, z) for z in support])
        lower, upper = _wilson_arrays(n, x_eff, z_crit)
        rows.append((weights, lower, upper))
    return tuple(rows)


def _count_open(lo: float, hi: float, total: int) -> int:
    """Number of integers k with lo < k < hi and 1 <= k <= total."""
    first = 1 if lo == -math.inf else max(1, math.floor(lo) + 1)
    last = total if hi == math.inf else min(total, math.ceil(hi) - 1)
    return max(0, last - first + 1)


def _rank_fraction(a: float, b: float, total: int) -> float:
    """Fraction of ranks u = k/total lying strictly inside (a, b)."""
    if total > _FLOAT_EXACT_INT:
        return max(0.0, min(b, 1.0) - max(a, 0.0))
    return _count_open(a * total, b * total, total) / total


def _stevens_nu_window(n: int, p: float, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Per x, the open nu1-interval (a, b) on which the Stevens interval covers p.

    p > p_L(nu1) iff nu1 f + P(X > x) > alpha/2, and p < p_U iff
    (1 - nu1) f + P(X < x) > alpha/2, with f = P(X = x).
    """
    pmf = binom_pmf_vector(n, p)
    below = np.concatenate(([0.0], np.cumsum(pmf)[:-1]))
    above = np.concatenate((np.cumsum(pmf[::-1])[::-1][1:], [0.0]))
    half = alpha / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (half - above) / pmf
        b = 1.0 - (half - below) / pmf
    zero = pmf == 0.0
    a[zero] = np.where(above[zero] > half, -np.inf, np.inf)
    b[zero] = np.where(below[zero] > half, np.inf, -np.inf)
    return a, b


def _score_window(n: int, p: float, alpha: float) -> tuple[float, float]:
    """Effective counts t for which the Wilson interval at t contains p: (lo, hi), open."""
    z = z_value(alpha)
    spread = z * math.sqrt(n * p * (1.0 - p))
    return n * p - spread, n * p + spread


def _noise_measure(n: int, x: int, lo: float, hi: float) -> float:
    """Measure of y in [-1/2, 1/2] with clamp(x + y, 0, n) strictly inside (lo, hi)."""
    seg_lo, seg_hi = max(x - 0.5, 0.0), min(x + 0.5, float(n))
    measure = max(0.0, min(seg_hi, hi) - max(seg_lo, lo))
    mass_at_zero = max(0.0, 0.5 - x)
    mass_at_n = max(0.0, x + 0.5 - n)
    if mass_at_zero and lo < 0.0 < hi:
        measure += mass_at_zero
    if mass_at_n and lo < n < hi:
        measure += mass_at_n
    return min(measure, 1.0)


def _rank_noise_fraction(n: int, x: int, lo: float, hi: float) -> float:
    total = math.comb(n, x)
    if total == 1:
        t = min(x + 0.5, float(n))
        return 1.0 if lo < t < hi else 0.0
    # 0 < x < n here, so x - 1/2 + k/total never needs clamping.
    shift = x - 0.5
    if total > _FLOAT_EXACT_INT:
        return max(0.0, min(hi - shift, 1.0) - max(lo - shift, 0.0))
    return _count_open((lo - shift) * total, (hi - shift) * total, total) / total


def conditional_coverage(spec: MethodSpec, n: int, p: float) -> np.ndarray:
    """Coverage probability given X = x, for every x = 0..n at once."""
    _check(n, p=p)
    method, alpha = spec.method, spec.alpha
    if p <= 0.0 or p >= 1.0:
        return np.zeros(n + 1)

    if not method.randomized:
        lower, upper = _deterministic_table(method, n, alpha)
        return ((lower < p) & (p < upper)).astype(float)

    if method is Method.SPLIT_WILSON:
        return np.array(
            [w[(lo < p) & (p < up)].sum() for w, lo, up in _split_table(n, alpha)]
        )

    if method is Method.STEVENS:
        a, b = _stevens_nu_window(n, p, alpha)
        return np.clip(np.minimum(b, 1.0) - np.maximum(a, 0.0), 0.0, 1.0)

    if method is Method.KORN:
        a, b = _stevens_nu_window(n, p, alpha)
        return np.array(
            [_rank_fraction(a[x], b[x], math.comb(n, x)) for x in range(n + 1)]
        )

    lo, hi = _score_window(n, p, alpha)
    if method is Method.U_NOISE_WILSON:
        return np.array([_noise_measure(n, x, lo, hi) for x in range(n + 1)])
    return np.array([_rank_noise_fraction(n, x, lo, hi) for x in range(n + 1)])


def coverage_given_x(spec: MethodSpec, n: int, x: int, p: float) -> float:
    """P(lower < p < upper | X = x), integrating over the method's randomization."""
    _check(n, p=p, x=x)
    return float(conditional_coverage(spec, n, p)[x])


def coverage(spec: MethodSpec, n: int, p: float) -> float:
    """Unconditional coverage probability at true proportion ``p``."""
    cond = conditional_coverage(spec, n, p)
    pmf = binom_pmf_vector(n, p)
    return math.fsum(pmf * cond)


# Expected lengths.


@lru_cache(maxsize=8)
def _legendre(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(nodes)


def _integrate(f, a: float, b: float, nodes: int) -> float:
    if b <= a:
        return 0.0
    t, w = _legendre(nodes)
    half = 0.5 * (b - a)
    values = f(half * t + 0.5 * (a + b))
    return half * float(np.dot(w, values))


def _stevens_length(n: int, x: int, nu1: np.ndarray, alpha: float) -> np.ndarray:
    lower, upper = stevens_bounds(n, x, nu1, 1.0 - nu1, alpha)
    return np.maximum(upper - lower, 0.0)


def _stevens_mean_length(n: int, x: int, alpha: float, nodes: int) -> float:
    # At x in {0, n} one bound hits 0 or 1 once nu1 or nu2 reaches alpha/2,
    # so the integrand has kinks there; integrate piecewise.
    cuts = [0.0, 1.0]
    if x in (0, n):
        cuts = [0.0, alpha / 2.0, 1.0 - alpha / 2.0, 1.0]
        cuts = sorted(set(cuts))
    return sum(
        _integrate(lambda nu: _stevens_length(n, x, nu, alpha), a, b, nodes)
        for a, b in zip(cuts[:-1], cuts[1:])
    )


def _noise_mean_length(n: int, x: int, alpha: float, nodes: int) -> float:
    z = z_value(alpha)

    def length(t):
        lower, upper = _wilson_arrays(n, t, z)
        return upper - lower

    seg_lo, seg_hi = max(x - 0.5, 0.0), min(x + 0.5, float(n))
    total = _integrate(length, seg_lo, seg_hi, nodes)
    total += max(0.0, 0.5 - x) * float(length(0.0))
    total += max(0.0, x + 0.5 - n) * float(length(float(n)))
    return total


def _rank_mean(values_at, total: int, chunk: int = 1 << 16) -> float:
    acc = 0.0
    for start in range(1, total + 1, chunk):
        k = np.arange(start, min(start + chunk, total + 1), dtype=float)
        acc += float(values_at(k / total).sum())
    return acc / total


def conditional_expected_length(
    spec: MethodSpec, n: int, x: int, nodes: int = DEFAULT_NODES
) -> float:
    """E[upper - lower | X = x], averaging over the randomization only.

    Continuous randomizations use ``nodes``-point Gauss-Legendre quadrature.
    Rank-based methods are averaged exactly over all C(n, x) ranks when there
    are at most EXACT_RANK_LIMIT of them, and by quadrature otherwise.
    """
    _check(n, x=x)
    method, alpha = spec.method, spec.alpha
    if not method.randomized:
        lower, upper = _deterministic_table(method, n, alpha)
        return float(upper[x] - lower[x])
    if method is Method.SPLIT_WILSON:
        weights, lower, upper = _split_table(n, alpha)[x]
        return float(np.dot(weights, upper - lower))
    if method is Method.STEVENS:
        return _stevens_mean_length(n, x, alpha, nodes)
    if method is Method.U_NOISE_WILSON:
        return _noise_mean_length(n, x, alpha, nodes)

    total = math.comb(n, x)
    if method is Method.KORN:
        if total > EXACT_RANK_LIMIT:
            return _stevens_mean_length(n, x, alpha, nodes)
        return _rank_mean(lambda u: _stevens_length(n, x, u, alpha), total)

    if total > EXACT_RANK_LIMIT:
        return _noise_mean_length(n, x, alpha, nodes)
    z = z_value(alpha)

    def noise_length(u):
        t = np.clip(x + u - 0.5, 0.0, n)
        lower, upper = _wilson_arrays(n, t, z)
        return upper - lower

    return _rank_mean(noise_length, total)


@lru_cache(maxsize=64)
def _conditional_lengths_cached(spec: MethodSpec, n: int, nodes: int) -> np.ndarray:
    out = np.array([conditional_expected_length(spec, n, x, nodes) for x in range(n + 1)])
    out.setflags(write=False)
    return out


def conditional_lengths(spec: MethodSpec, n: int, nodes: int = DEFAULT_NODES) -> np.ndarray:
    """Conditional expected lengths for every x = 0..n (memoized)."""
    _check(n)
    return _conditional_lengths_cached(spec, n, nodes)


def expected_length(spec: MethodSpec, n: int, p: float, nodes: int = DEFAULT_NODES) -> float:
    _check(n, p=p)
    return math.fsum(binom_pmf_vector(n, p) * conditional_lengths(spec, n, nodes))


def evaluate(spec: MethodSpec, n: int, p: float) -> EvaluationPoint:
    return EvaluationPoint(p, coverage(spec, n, p), expected_length(spec, n, p))


# Randomization impact.


def upper_bound_range(spec: MethodSpec, n: int, x: int) -> BoundRange:
    """Smallest and largest upper bound over every possible randomization outcome."""
    _check(n, x=x)
    method, alpha = spec.method, spec.alpha
    if not method.randomized:
        raise DomainError(f"{method.value} is not randomized")

    if method is Method.SPLIT_WILSON:
        # Full scan of the support; the extremes need not be assumed at its ends.
        _, _, upper = _split_table(n, alpha)[x]
    elif method is Method.STEVENS:
        _, upper = stevens_bounds(n, x, [1.0, 0.0], [0.0, 1.0], alpha)
    elif method is Method.KORN:
        u = np.array([1.0 / math.comb(n, x), 1.0])
        _, upper = stevens_bounds(n, x, u, 1.0 - u, alpha)
    else:
        if method is Method.U_NOISE_WILSON:
            y = np.array([-0.5, 0.5])
        else:
            y = np.array([1.0 / math.comb(n, x), 1.0]) - 0.5
        _, upper = _wilson_arrays(n, np.clip(x + y, 0.0, n), z_value(alpha))
    return BoundRange(float(np.min(upper)), float(np.max(upper)))


def distinct_value_count(n: int) -> tuple[int, int]:
    """Number of distinct data summaries under split-sample and rank randomization.

    The split count is the number of distinct effective counts n * p_tilde over
    all (x, z), compared as exact rationals.  Rank randomization distinguishes
    every 0/1 sequence, giving 2**n.
    """
    design = split_sample_sizes(n)
    n1, n2 = design.n1, design.n2
    values = {
        Fraction(n * z, 2 * n1) + Fraction(n * (x - z), 2 * n2)
        for x in range(n + 1)
        for z in hypergeom_support(n, x, n1)
    }
    return len(values), 2**n
