import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lattice_ci.dist import (
    BinomialSample,
    binom_cdf,
    binom_pmf,
    binom_pmf_vector,
    binom_sf,
    hypergeom_pmf,
    hypergeom_support,
    log_binom_coeff,
    normal_cdf,
    normal_quantile,
)
from lattice_ci.errors import DomainError


def pascal_row(n):
    row = [1]
    for _ in range(n):
        row = [a + b for a, b in zip([0] + row, row + [0])]
    return row


def exact_pmf(n, p, k):
    return math.comb(n, k) * p**k * (1 - p) ** (n - k)


def test_log_binom_coeff_examples():
    assert log_binom_coeff(20, 0) == 0.0
    assert pascal_row(20)[10] == 184756
    assert log_binom_coeff(20, 10) == pytest.approx(math.log(184756), rel=1e-15)
    assert log_binom_coeff(4, 2) == pytest.approx(math.log(6), rel=1e-15)


@pytest.mark.parametrize("n", [1, 7, 30, 61])
def test_log_binom_coeff_matches_pascal(n):
    for k, c in enumerate(pascal_row(n)):
        assert log_binom_coeff(n, k) == pytest.approx(math.log(c), rel=1e-14, abs=1e-15)


@pytest.mark.parametrize("n,k", [(10**6, 1), (10**6, 37), (10**6, 5000), (10**6, 500000)])
def test_log_binom_coeff_large_n(n, k):
    mpmath.mp.dps = 40
    expected = mpmath.log(mpmath.binomial(n, k))
    assert abs(log_binom_coeff(n, k) - float(expected)) <= 1e-12 * abs(float(expected))


@pytest.mark.parametrize("n,k", [(5, -1), (5, 6), (-1, 0)])
def test_log_binom_coeff_domain(n, k):
    with pytest.raises(DomainError):
        log_binom_coeff(n, k)


def test_binom_pmf_examples():
    assert binom_pmf(2, 0.5, 1) == 0.5
    assert binom_pmf(10, 0.0, 0) == 1.0
    assert binom_pmf(10, 1.0, 10) == 1.0
    assert binom_pmf(10, 1.0, 3) == 0.0
    expected = exact_pmf(10, Fraction(3, 10), 2)
    assert binom_pmf(10, 0.3, 2) == pytest.approx(float(expected), rel=1e-13)


def test_binom_cdf_examples():
    assert binom_cdf(10, 0.5, 10) == 1.0
    assert binom_cdf(10, 0.5, -1) == 0.0
    expected = sum(exact_pmf(10, Fraction(3, 10), k) for k in range(4))
    assert binom_cdf(10, 0.3, 3) == pytest.approx(float(expected), rel=1e-13)


@pytest.mark.parametrize("n", [1, 5, 17, 30])
@pytest.mark.parametrize("p", [Fraction(1, 1000), Fraction(1, 7), Fraction(1, 2), Fraction(19, 20)])
def test_cdf_and_sf_against_rational_sums(n, p):
    for k in range(-1, n + 1):
        lower = sum((exact_pmf(n, p, j) for j in range(k + 1)), Fraction(0))
        upper = sum((exact_pmf(n, p, j) for j in range(k + 1, n + 1)), Fraction(0))
        assert abs(binom_cdf(n, float(p), k) - float(lower)) <= 1e-12
        assert abs(binom_sf(n, float(p), k) - float(upper)) <= 1e-12


def test_small_upper_tail_has_no_cancellation():
    # P(Bin(50, 0.01) > 20) is about 1e-26; 1 - cdf would give 0.
    exact = sum(exact_pmf(50, Fraction(1, 100), j) for j in range(21, 51))
    assert binom_sf(50, 0.01, 20) == pytest.approx(float(exact), rel=1e-10)


@pytest.mark.parametrize("n", [1, 10, 100, 1000])
def test_pmf_sums_to_one_on_grid(n):
    for p in np.linspace(0.0, 1.0, 101):
        assert abs(binom_pmf_vector(n, p).sum() - 1.0) <= 1e-12


def test_pmf_vector_matches_scalar():
    grid = np.array([0.0, 0.2, 0.77, 1.0])
    mat = binom_pmf_vector(9, grid)
    for i, p in enumerate(grid):
        for k in range(10):
            assert mat[i, k] == pytest.approx(binom_pmf(9, float(p), k), rel=1e-12, abs=1e-300)


def test_hypergeom_examples():
    assert hypergeom_pmf(11, 11, 6, 6) == 1.0
    assert hypergeom_pmf(11, 0, 6, 0) == 1.0
    expected = Fraction(math.comb(5, 3) * math.comb(6, 3), math.comb(11, 6))
    assert hypergeom_pmf(11, 5, 6, 3) == pytest.approx(float(expected), rel=1e-15)
    assert hypergeom_pmf(11, 5, 6, 6) == 0.0
    assert list(hypergeom_support(11, 8, 6)) == [3, 4, 5, 6]


def test_hypergeom_against_subset_enumeration():
    # Brute force: place x successes in positions 0..x-1 and enumerate subsamples.
    n, n1 = 9, 4
    for x in range(n + 1):
        counts = {}
        for chosen in itertools.combinations(range(n), n1):
            z = sum(1 for i in chosen if i < x)
            counts[z] = counts.get(z, 0) + 1
        total = math.comb(n, n1)
        for z in range(-1, n1 + 2):
            assert hypergeom_pmf(n, x, n1, z) == pytest.approx(counts.get(z, 0) / total, rel=1e-14)


def test_hypergeom_bad_n1():
    with pytest.raises(DomainError):
        hypergeom_pmf(5, 2, 0, 0)
    with pytest.raises(DomainError):
        hypergeom_pmf(5, 2, 5, 2)


@given(st.integers(2, 25).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n), st.integers(1, n - 1))))
def test_hypergeom_sums_to_one_and_mean(args):
    n, x, n1 = args
    support = hypergeom_support(n, x, n1)
    probs = [hypergeom_pmf(n, x, n1, z) for z in support]
    assert abs(math.fsum(probs) - 1.0) <= 1e-12
    mean = math.fsum(z * q for z, q in zip(support, probs))
    assert abs(mean - x * n1 / n) <= 1e-12


def test_normal_quantile_examples():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)
    for q in (2.0**-30, 0.01, 0.2, 0.4999):
        assert normal_quantile(q) == pytest.approx(-normal_quantile(1 - q), abs=1e-12)


@pytest.mark.parametrize("q", [1e-40, 1e-15, 1e-6, 0.001, 0.02425, 0.025, 0.3, 0.5 - 1e-9, 0.6, 0.975, 0.999999])
def test_normal_quantile_against_mpmath(q):
    mpmath.mp.dps = 120
    expected = -mpmath.sqrt(2) * mpmath.erfinv(1 - 2 * mpmath.mpf(q))
    assert abs(normal_quantile(q) - float(expected)) <= 1e-9


def test_normal_quantile_roundtrip():
    for z in np.linspace(-6, 6, 241):
        assert abs(normal_quantile(normal_cdf(z)) - z) <= 1e-8


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.5])
def test_normal_quantile_domain(q):
    with pytest.raises(DomainError):
        normal_quantile(q)


def test_binomial_sample_validation():
    assert BinomialSample(10, 3).p_hat == 0.3
    assert BinomialSample(10, 3).mirrored() == BinomialSample(10, 7)
    with pytest.raises(DomainError):
        BinomialSample(0, 0)
    with pytest.raises(DomainError):
        BinomialSample(5, 6)


@settings(max_examples=50)
@given(st.integers(1, 200), st.floats(0.0, 1.0), st.data())
def test_cdf_plus_sf_is_one(n, p, data):
    k = data.draw(st.integers(-1, n))
    assert abs(binom_cdf(n, p, k) + binom_sf(n, p, k) - 1.0) <= 1e-12
