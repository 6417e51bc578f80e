import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from extremalpp.datagen import make_rng
from extremalpp.gof import ks_statistic
from extremalpp.prmref import (GUMBEL, GammaPoints, LimitFamily, limit_cdf, mean_measure,
                               orderstat_k_cdf, prm_transform, record_gap_cdf, record_joint_cdf,
                               record_last_cdf, sample_gamma, sample_limit_records, sample_prm)

FAMILIES = [GUMBEL, LimitFamily("frechet", 2.0), LimitFamily("weibull", 1.5)]


@given(st.integers(0, 2**32), st.integers(1, 30))
def test_gamma_strictly_increasing(seed, k):
    g = sample_gamma(k, seed).gammas
    assert g[0] > 0 and np.all(np.diff(g) > 0)


def test_gamma_means():
    G = sample_gamma(3, 5, size=10**5)
    assert abs(G[:, 0].mean() - 1) < 0.02
    assert abs(G[:, 2].mean() - 3) < 0.04


def test_gamma_points_validated():
    with pytest.raises(ValueError):
        GammaPoints(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        sample_gamma(0, 1)


def test_prm_transform_examples():
    assert prm_transform(np.array([1, math.e]), GUMBEL) == pytest.approx([0, -1])
    assert prm_transform(np.array([0.5, 2]), LimitFamily("frechet", 1.0)) == pytest.approx([2, 0.5])
    assert prm_transform(np.array([4.0]), LimitFamily("weibull", 2.0)) == pytest.approx([-2])


@given(st.integers(0, 2**32), st.sampled_from(FAMILIES))
def test_prm_transform_decreasing(seed, fam):
    out = prm_transform(sample_gamma(20, seed), fam)
    assert np.all(np.diff(out) < 0)


def test_mean_measure_examples():
    assert mean_measure(GUMBEL, 0, math.inf) == 1
    assert mean_measure(LimitFamily("frechet", 2.0), 1, 2) == pytest.approx(0.75)
    assert mean_measure(LimitFamily("weibull", 1.0), -3, -1) == pytest.approx(2)
    with pytest.raises(ValueError):
        mean_measure(GUMBEL, 1, 1)
    with pytest.raises(ValueError):
        mean_measure(LimitFamily("frechet", 1.0), 0, 1)
    with pytest.raises(ValueError):
        mean_measure(LimitFamily("weibull", 1.0), -1, 1)


def test_family_parse_and_validation():
    assert LimitFamily.parse("Frechet:2") == LimitFamily("frechet", 2.0)
    assert LimitFamily.parse(str(LimitFamily("weibull", 1.5))) == LimitFamily("weibull", 1.5)
    with pytest.raises(ValueError):
        LimitFamily("frechet", -1.0)
    with pytest.raises(ValueError):
        LimitFamily("pareto")


def test_limit_cdf_examples():
    assert limit_cdf(GUMBEL, 0.0) == pytest.approx(math.exp(-1))
    assert orderstat_k_cdf(GUMBEL, 2, 0.0) == pytest.approx(2 * math.exp(-1))
    x = np.linspace(-3, 5, 50)
    assert np.allclose(orderstat_k_cdf(GUMBEL, 2, x), (1 + np.exp(-x)) * np.exp(-np.exp(-x)))


@pytest.mark.parametrize("fam", FAMILIES, ids=str)
def test_limit_cdf_valid(fam):
    x = np.linspace(-50, 50, 20001)
    F = limit_cdf(fam, x)
    assert np.all(np.diff(F) >= 0)
    assert F[0] < 1e-6 and F[-1] > 1 - 1e-3
    for xv in (-2.0, -0.5, 0.5, 2.0):
        vals = [orderstat_k_cdf(fam, k, xv) for k in range(1, 6)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("fam", FAMILIES, ids=str)
@pytest.mark.parametrize("k", [1, 2, 3])
def test_orderstat_self_consistency(fam, k):
    G = sample_gamma(3, 1000 + k, size=10**5)
    pts = fam.transform(G[:, k - 1])
    assert ks_statistic(pts, lambda x: orderstat_k_cdf(fam, k, x)) <= 0.01


def test_record_law_examples():
    assert record_gap_cdf(1.0) == 1.0
    assert record_gap_cdf(0.5) == pytest.approx(0.5 * (1 + math.log(2)))
    assert record_joint_cdf(0.8, 0.4) == pytest.approx(0.4 + 0.4 * math.log(2))
    assert record_joint_cdf(0.3, 0.6) == record_last_cdf(0.3)
    assert record_last_cdf(0.25) == 0.25
    for bad in (0.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            record_gap_cdf(bad)
        with pytest.raises(ValueError):
            record_last_cdf(bad)


def test_gap_density_integrates_to_one():
    val, err = integrate.quad(lambda w: -math.log(w), 0, 1)
    assert abs(val - 1) < 1e-8
    assert record_gap_cdf(0.3) == pytest.approx(integrate.quad(lambda w: -math.log(w), 0, 0.3)[0], abs=1e-10)


def test_order_two_gap_closed_form():
    x = np.linspace(0.01, 1, 40)
    assert np.allclose(record_gap_cdf(x, 2), 4 * x - 3 * x**2 + 2 * x**2 * np.log(x))
    for xv in x[::7]:
        tail = integrate.quad(lambda u: 3 * (u - xv) ** 3 / u, xv, 1)[0]
        assert record_gap_cdf(xv, 3) == pytest.approx(1 - tail, abs=1e-10)


def test_sample_prm_counts():
    rng = make_rng(4)
    counts = [sample_prm(GUMBEL, 0.0, rng).size for _ in range(4000)]
    assert abs(np.mean(counts) - 1) < 0.06
    pts = sample_prm(GUMBEL, -3.0, rng)
    assert np.all(pts > -3) and np.all(np.diff(pts) < 0)


@pytest.mark.parametrize("order", [1, 2])
def test_simulated_limit_records(order):
    rng = make_rng(30 + order)
    last, gaps = [], []
    for _ in range(4000):
        t = sample_limit_records(order, rng)
        last.append(t[-1])
        if t.size >= 2:
            gaps.append(t[-1] - t[-2])
    assert ks_statistic(last, lambda x: record_last_cdf(np.clip(x, 1e-300, 1), order)) < 0.03
    assert ks_statistic(gaps, lambda x: record_gap_cdf(np.clip(x, 1e-300, 1), order)) < 0.03
    if order == 1:
        assert np.mean(np.array(gaps) <= 0.5) == pytest.approx(record_gap_cdf(0.5), abs=0.03)
