import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from extremalpp import kernels as K
from extremalpp.datagen import make_rng
from extremalpp.exactdist import (EXACT_LIMIT, exact_rho_pmf, inversion_mgf, inversion_mgf_from_counts,
                                  kendall_pmf, mahonian_counts)
from extremalpp.scaling import tau_variance


def enumerate_tau(n):
    counts = {}
    base = list(range(n))
    for perm in itertools.permutations(base):
        S = K.kendall_concordance_bruteforce(np.array(base, float), np.array(perm, float))
        tau = Fraction(2 * S, n * (n - 1))
        counts[tau] = counts.get(tau, 0) + 1
    return counts


def test_mahonian_examples():
    assert mahonian_counts(1) == [1]
    assert mahonian_counts(3) == [1, 2, 2, 1]
    assert mahonian_counts(4) == [1, 3, 5, 6, 5, 3, 1]


@pytest.mark.parametrize("n", range(1, 8))
def test_mahonian_by_enumeration(n):
    tally = [0] * (n * (n - 1) // 2 + 1)
    for perm in itertools.permutations(range(n)):
        tally[K.count_inversions(perm)] += 1
    assert mahonian_counts(n) == tally


def test_mahonian_sum_and_symmetry():
    for n in range(1, EXACT_LIMIT + 1):
        c = mahonian_counts(n)
        assert len(c) == n * (n - 1) // 2 + 1
        assert sum(c) == math.factorial(n)
        assert c == c[::-1]


def test_mahonian_float_mode_matches_exact_shape():
    from extremalpp.exactdist import _mahonian_float

    rel, log_scale, err = _mahonian_float(30)
    exact = np.array(mahonian_counts(30), dtype=float)
    assert np.max(np.abs(rel - exact / exact.max())) < err
    big = kendall_pmf(EXACT_LIMIT + 5)
    assert big.arithmetic == "normalized_float"
    assert abs(big.probs.sum() - 1) < 1e-12
    assert big.variance() == pytest.approx(tau_variance(EXACT_LIMIT + 5), rel=1e-10)


def test_kendall_pmf_n3():
    pmf = kendall_pmf(3)
    assert pmf.support == (Fraction(-1), Fraction(-1, 3), Fraction(1, 3), Fraction(1))
    assert pmf.exact_probs() == [Fraction(1, 6), Fraction(1, 3), Fraction(1, 3), Fraction(1, 6)]
    assert pmf.variance() == Fraction(11, 27) == tau_variance(3, exact=True)


@pytest.mark.parametrize("n", range(2, 9))
def test_kendall_pmf_matches_enumeration(n):
    pmf = kendall_pmf(n)
    counts = enumerate_tau(n)
    assert dict(zip(pmf.support, pmf.counts)) == counts


def test_kendall_pmf_moments_exact():
    for n in range(2, 31):
        pmf = kendall_pmf(n)
        assert pmf.mean() == 0
        assert pmf.variance() == tau_variance(n, exact=True)
        assert list(pmf.support) == sorted(pmf.support)
        assert pmf.counts == pmf.counts[::-1]


def test_kendall_pmf_csv():
    text = kendall_pmf(5).to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "value,count,probability"
    assert len(lines) == 12
    assert sum(float(l.split(",")[2]) for l in lines[1:]) == pytest.approx(1.0, abs=1e-15)


def test_kendall_sampling_consistency():
    n, R = 5, 10**6
    rng = make_rng(2024)
    perms = np.argsort(rng.random((R, n)), axis=1)
    inv = np.zeros(R, dtype=np.int64)
    for s in range(n):
        for t in range(s + 1, n):
            inv += perms[:, s] > perms[:, t]
    observed = np.bincount(inv, minlength=11)
    expected = np.array(kendall_pmf(5).counts[::-1], float) / 120 * R
    assert stats.chisquare(observed, expected).pvalue > 0.001


def test_mgf_examples():
    for n in (1, 5, 20):
        assert inversion_mgf(n, 0.0) == 1.0
    assert inversion_mgf(3, 0.1) == pytest.approx(inversion_mgf_from_counts(3, 0.1), abs=1e-12)
    for n in (4, 9, 15):
        h = 1e-5
        deriv = (inversion_mgf(n, h) - inversion_mgf(n, -h)) / (2 * h)
        assert deriv == pytest.approx(n * (n - 1) / 4, rel=1e-4)


def test_mgf_near_zero_continuous():
    for t in (-2e-6, -9e-7, 9e-7, 2e-6):
        assert inversion_mgf(8, t) == pytest.approx(inversion_mgf_from_counts(8, t), abs=1e-12)


@given(st.integers(1, 12), st.floats(-0.2, 0.2))
def test_mgf_matches_pmf(n, t):
    assert abs(inversion_mgf(n, t) - inversion_mgf_from_counts(n, t)) <= 1e-10 * max(1.0, inversion_mgf(n, t))


def test_mgf_overflow_hint():
    with pytest.raises(OverflowError, match="use t <="):
        inversion_mgf(200, 1.0)


def test_rho_pmf_n3():
    pmf = exact_rho_pmf(3)
    assert pmf.support == (Fraction(-1), Fraction(-1, 2), Fraction(1, 2), Fraction(1))
    assert pmf.exact_probs() == [Fraction(1, 6), Fraction(1, 3), Fraction(1, 3), Fraction(1, 6)]
    assert pmf.variance() == Fraction(1, 2)
    for n in range(2, 9):
        assert exact_rho_pmf(n).mean() == 0
    with pytest.raises(ValueError):
        exact_rho_pmf(9)
