"""Confidence interval constructors for a binomial proportion.

Every method maps a :class:`~lattice_ci.dist.BinomialSample`, a nominal level
``alpha`` and, for randomized methods, an explicit randomization draw to a
:class:`ConfidenceInterval`.  Nothing here draws random numbers; callers
supply the draw.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .dist import BinomialSample, binom_tails, hypergeom_support, normal_quantile
from .errors import ConfigurationError, DomainError

__all__ = [
    "ConfidenceInterval",
    "SplitDesign",
    "HypergeometricZ",
    "UniformNoise",
    "StevensNu",
    "RankU",
    "RandomizationDraw",
    "Method",
    "MethodSpec",
    "z_value",
    "wilson",
    "split_sample_sizes",
    "split_tilde_x",
    "split_sample_wilson",
    "u_noise_wilson",
    "stevens",
    "stevens_bounds",
    "clopper_pearson",
    "mid_p",
    "construct",
]

BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 60


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise DomainError(f"invalid interval ({self.lower}, {self.upper})")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def covers(self, p: float) -> bool:
        """Open-interval coverage: endpoints do not count."""
        return self.lower < p < self.upper

    def mirrored(self) -> ConfidenceInterval:
        return ConfidenceInterval(1.0 - self.upper, 1.0 - self.lower)


@dataclass(frozen=True)
class SplitDesign:
    """Sizes of the two subsamples used by the split sample estimator."""

    n1: int
    n2: int

    def __post_init__(self) -> None:
        if self.n1 < 1 or self.n2 < 1 or self.n1 == self.n2:
            raise ConfigurationError(f"invalid split design n1={self.n1}, n2={self.n2}")

    @property
    def n(self) -> int:
        return self.n1 + self.n2


# Randomization draws.  Each variant carries exactly one payload.


@dataclass(frozen=True)
class HypergeometricZ:
    """Number of successes that land in the first subsample."""

    z: int


@dataclass(frozen=True)
class UniformNoise:
    y: float

    def __post_init__(self) -> None:
        if not -0.5 <= self.y <= 0.5:
            raise DomainError(f"uniform noise must lie in [-1/2, 1/2], got {self.y}")


@dataclass(frozen=True)
class StevensNu:
    nu1: float

    def __post_init__(self) -> None:
        if not 0.0 < self.nu1 <= 1.0:
            raise DomainError(f"nu1 must lie in (0, 1], got {self.nu1}")

    @property
    def nu2(self) -> float:
        return 1.0 - self.nu1


@dataclass(frozen=True)
class RankU:
    """Normalized permutation rank k / C(n, x) of an observed trial sequence."""

    u: float

    def __post_init__(self) -> None:
        if not 0.0 < self.u <= 1.0:
            raise DomainError(f"rank u must lie in (0, 1], got {self.u}")


RandomizationDraw = Union[HypergeometricZ, UniformNoise, StevensNu, RankU]


class Method(enum.Enum):
    WILSON = "wilson"
    CLOPPER_PEARSON = "clopper-pearson"
    MID_P = "mid-p"
    SPLIT_WILSON = "split-wilson"
    U_NOISE_WILSON = "u-noise-wilson"
    STEVENS = "stevens"
    KORN = "korn"
    DATA_RAND_U_WILSON = "data-rand-u-wilson"

    @property
    def randomized(self) -> bool:
        return self not in (Method.WILSON, Method.CLOPPER_PEARSON, Method.MID_P)

    @property
    def externally_randomized(self) -> bool:
        return self in (Method.SPLIT_WILSON, Method.U_NOISE_WILSON, Method.STEVENS)

    @property
    def data_randomized(self) -> bool:
        return self in (Method.KORN, Method.DATA_RAND_U_WILSON)


@dataclass(frozen=True)
class MethodSpec:
    method: Method
    alpha: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")


def z_value(alpha: float) -> float:
    """Positive two-sided normal critical value, Phi^-1(1 - alpha/2)."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return normal_quantile(1.0 - alpha / 2.0)


def _wilson_arrays(n: int, x_eff, z: float) -> tuple[np.ndarray, np.ndarray]:
    x_eff = np.asarray(x_eff, dtype=float)
    z2 = z * z
    p_hat = x_eff / n
    center = (p_hat * n + z2 / 2.0) / (n + z2)
    radical = np.sqrt(np.maximum(p_hat * (1.0 - p_hat) * n + z2 / 4.0, 0.0))
    half = z / (n + z2) * radical
    return np.clip(center - half, 0.0, 1.0), np.clip(center + half, 0.0, 1.0)


def wilson(n: int, x_eff: float, alpha: float = 0.05) -> ConfidenceInterval:
    """Wilson score interval evaluated at a possibly non-integer count."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0.0 <= x_eff <= n:
        raise DomainError(f"effective count must lie in [0, {n}], got {x_eff}")
    lo, hi = _wilson_arrays(n, x_eff, z_value(alpha))
    return ConfidenceInterval(float(lo), float(hi))


def split_sample_sizes(n: int) -> SplitDesign:
    """Subsample sizes n1 = round(n/2 + 0.15 n^(3/4)), n2 = n - n1.

    Ties round away from zero.  Raises ConfigurationError when the rule
    yields n1 == n2 (this happens for n = 2 and n = 4).
    """
    if n < 2:
        raise DomainError(f"split sample needs n >= 2, got {n}")
    n1 = math.floor(n / 2 + 0.15 * n**0.75 + 0.5)
    if n1 >= n:
        raise ConfigurationError(f"split rule gives n1={n1} for n={n}")
    return SplitDesign(n1, n - n1)


def split_tilde_x(sample: BinomialSample, design: SplitDesign, z: int) -> float:
    """Effective count n * p_tilde when the first subsample holds ``z`` successes.

    p_tilde is the average of the two subsample proportions.
    """
    if design.n != sample.n:
        raise DomainError(f"design sizes sum to {design.n}, sample has n={sample.n}")
    if z not in hypergeom_support(sample.n, sample.x, design.n1):
        raise DomainError(f"z={z} outside the hypergeometric support")
    n = sample.n
    x_eff = n / (2 * design.n1) * z + n / (2 * design.n2) * (sample.x - z)
    return min(max(x_eff, 0.0), float(n))


def split_sample_wilson(
    sample: BinomialSample, alpha: float, draw: HypergeometricZ
) -> ConfidenceInterval:
    design = split_sample_sizes(sample.n)
    return wilson(sample.n, split_tilde_x(sample, design, draw.z), alpha)


def u_noise_wilson(
    sample: BinomialSample, alpha: float, draw: UniformNoise
) -> ConfidenceInterval:
    """Wilson interval at x + y, with x + y clamped to [0, n]."""
    x_eff = min(max(sample.x + draw.y, 0.0), float(sample.n))
    return wilson(sample.n, x_eff, alpha)


def _bisect(g, lo: np.ndarray, hi: np.ndarray, increasing: bool, target: float) -> np.ndarray:
    for _ in range(BISECTION_MAX_ITER):
        if lo.size == 0 or np.max(hi - lo) <= BISECTION_TOL:
            break
        mid = 0.5 * (lo + hi)
        below = g(mid) < target
        go_right = below if increasing else ~below
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


def stevens_bounds(
    n: int, x: int, nu1, nu2, alpha: float = 0.05
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Stevens bounds for one (n, x) and arrays of nu1, nu2.

    The lower bound solves nu1 P(X=x) + P(X>x) = alpha/2 and the upper bound
    solves nu2 P(X=x) + P(X<x) = alpha/2.  Both left-hand sides are monotone
    in p; when no crossing exists in (0, 1) the bound sits at 0 or 1.
    """
    if not 0 <= x <= n:
        raise DomainError(f"need 0 <= x <= n, got n={n}, x={x}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    nu1 = np.atleast_1d(np.asarray(nu1, dtype=float))
    nu2 = np.atleast_1d(np.asarray(nu2, dtype=float))
    nu1, nu2 = np.broadcast_arrays(nu1, nu2)
    if np.any((nu1 < 0) | (nu1 > 1) | (nu2 < 0) | (nu2 > 1)):
        raise DomainError("nu1 and nu2 must lie in [0, 1]")
    target = alpha / 2.0

    # Lower bound: g_L increases from nu1*[x==0] at p=0 to nu1*[x==n] + [x<n] at p=1.
    g_lower_at_0 = nu1 * (x == 0)
    g_lower_at_1 = nu1 * (x == n) + (x < n)
    lower = np.where(g_lower_at_0 >= target, 0.0, 1.0)
    solve = (g_lower_at_0 < target) & (g_lower_at_1 > target)
    if np.any(solve):
        w = nu1[solve]

        def g_lower(p):
            _, at, above = binom_tails(n, x, p)
            return w * at + above

        m = int(solve.sum())
        lower[solve] = _bisect(g_lower, np.zeros(m), np.ones(m), True, target)

    # Upper bound: g_U decreases from nu2*[x==0] + [x>0] at p=0 to nu2*[x==n] at p=1.
    g_upper_at_0 = nu2 * (x == 0) + (x > 0)
    g_upper_at_1 = nu2 * (x == n)
    upper = np.where(g_upper_at_1 >= target, 1.0, 0.0)
    solve = (g_upper_at_1 < target) & (g_upper_at_0 > target)
    if np.any(solve):
        w = nu2[solve]

        def g_upper(p):
            below, at, _ = binom_tails(n, x, p)
            return w * at + below

        m = int(solve.sum())
        upper[solve] = _bisect(g_upper, np.zeros(m), np.ones(m), False, target)

    return lower, upper


def stevens(
    sample: BinomialSample, alpha: float, nu1: float, nu2: float
) -> ConfidenceInterval:
    lower, upper = stevens_bounds(sample.n, sample.x, nu1, nu2, alpha)
    lo, hi = float(lower[0]), float(upper[0])
    # nu1 + nu2 < 1 can leave no p satisfying both tail conditions; an empty
    # region is reported as a zero-length interval, which covers nothing.
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return ConfidenceInterval(lo, hi)


def clopper_pearson(sample: BinomialSample, alpha: float = 0.05) -> ConfidenceInterval:
    return stevens(sample, alpha, 1.0, 1.0)


def mid_p(sample: BinomialSample, alpha: float = 0.05) -> ConfidenceInterval:
    return stevens(sample, alpha, 0.5, 0.5)


def construct(
    spec: MethodSpec, sample: BinomialSample, draw: RandomizationDraw | None = None
) -> ConfidenceInterval:
    """Build the interval named by ``spec`` from a sample and an explicit draw."""
    method, alpha = spec.method, spec.alpha
    if not method.randomized:
        if draw is not None:
            raise DomainError(f"{method.value} takes no randomization draw")
        if method is Method.WILSON:
            return wilson(sample.n, sample.x, alpha)
        if method is Method.CLOPPER_PEARSON:
            return clopper_pearson(sample, alpha)
        return mid_p(sample, alpha)

    expected = {
        Method.SPLIT_WILSON: HypergeometricZ,
        Method.U_NOISE_WILSON: UniformNoise,
        Method.STEVENS: StevensNu,
        Method.KORN: RankU,
        Method.DATA_RAND_U_WILSON: RankU,
    }[method]
    if not isinstance(draw, expected):
        raise DomainError(f"{method.value} needs a {expected.__name__} draw, got {draw!r}")

    if method is Method.SPLIT_WILSON:
        return split_sample_wilson(sample, alpha, draw)
    if method is Method.U_NOISE_WILSON:
        return u_noise_wilson(sample, alpha, draw)
    if method is Method.STEVENS:
        return stevens(sample, alpha, draw.nu1, draw.nu2)
    if method is Method.KORN:
        return stevens(sample, alpha, draw.u, 1.0 - draw.u)
    return u_noise_wilson(sample, alpha, UniformNoise(draw.u - 0.5))
