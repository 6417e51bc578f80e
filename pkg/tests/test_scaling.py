import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from extremalpp import kernels as K
from extremalpp.scaling import (Affine, d_of, interpoint_constants, r_variance, rank_transform,
                                rho_variance, scaling_constants, statistic_transform, tau_variance)

# 40-digit evaluations of the closed form (mpmath)
D_4950 = 3.558520777948124703649767633486539281291
B_50_100 = 171.1704155589624940729953526697307856258
C_50_100 = 0.1779260388974062351824883816743269640646


def exact_moments(n):
    """Exact second moments of tau, rho and r over all n! relative-rank permutations."""
    base = list(range(1, n + 1))
    s_tau = s_rho = s_r = Fraction(0)
    for perm in itertools.permutations(base):
        x, y = np.array(base, float), np.array(perm, float)
        S = K.kendall_concordance_bruteforce(x, y)
        tau = Fraction(2 * S, n * (n - 1))
        num = sum((2 * a - n - 1) * (2 * b - n - 1) for a, b in zip(base, perm))
        rho = Fraction(3 * num, n * (n * n - 1))
        total = round(K.r_major_bruteforce(x, y) * n * (n - 1) * (n - 2) / 3)
        r = Fraction(3 * total, n * (n - 1) * (n - 2))
        s_tau += tau * tau
        s_rho += rho * rho
        s_r += r * r
    f = math.factorial(n)
    return s_tau / f, s_rho / f, s_r / f


def test_d_of_examples():
    assert d_of(4950) == pytest.approx(D_4950, abs=1e-12)
    assert abs(d_of(4950) - 3.5586) < 1e-4
    L = math.log(15)
    assert d_of(15) == pytest.approx(math.sqrt(2 * L) - (math.log(L) + math.log(4 * math.pi)) / (2 * math.sqrt(2 * L)))
    with pytest.raises(ValueError):
        d_of(2)


def test_d_of_increasing():
    grid = np.unique(np.geomspace(8, 1e9, 400).astype(int))
    vals = [d_of(int(c)) for c in grid]
    assert np.all(np.diff(vals) > 0)


def test_interpoint_constants():
    b, c = interpoint_constants(50, 100, 3.0)
    assert b == pytest.approx(B_50_100, abs=1e-10)
    assert c == pytest.approx(C_50_100, abs=1e-12)
    with pytest.raises(ValueError):
        interpoint_constants(50, 100, 0.5)


@given(st.integers(1, 10**4), st.integers(3, 2000), st.floats(1.0, 50.0))
def test_interpoint_identity(n, p, ex4):
    b, c = interpoint_constants(n, p, ex4)
    d = d_of(p * (p - 1) // 2)
    assert c > 0
    assert c * (b - 2 * n) == pytest.approx(d * d, rel=1e-12)


def test_variance_examples():
    assert tau_variance(3, exact=True) == Fraction(11, 27)
    assert rho_variance(3, exact=True) == Fraction(1, 2)
    assert r_variance(3, exact=True) == 1
    for f, lo in ((tau_variance, 2), (rho_variance, 2), (r_variance, 3)):
        with pytest.raises(ValueError):
            f(lo - 1)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_variances_match_enumeration(n):
    vt, vr, vq = exact_moments(n)
    assert vt == tau_variance(n, exact=True)
    assert vr == rho_variance(n, exact=True)
    assert vq == r_variance(n, exact=True)


def test_gumbel_calibration_of_normal_tail():
    for count in (4950, 10**6):
        d = d_of(count)
        val = count * norm.sf(0 / d + d)
        assert abs(val - 1.0) <= 0.15


def test_rank_transform_roundtrip():
    t = rank_transform(0.2, 0.5, 4950)
    d = d_of(4950)
    v = np.linspace(-1, 1, 7)
    assert np.allclose(t(v), d * ((v - 0.2) / 0.5 - d))
    assert np.allclose(t.inverse(t(v)), v)
    with pytest.raises(ValueError):
        Affine(0.0, 0.0)


def test_scaling_constants_reproducible():
    a = scaling_constants(200, 100).as_dict()
    b = scaling_constants(200, 100).as_dict()
    assert a == b
    assert a["p_tilde"] == 4950 and a["d_p"] > 0 and a["c_n"] > 0


def test_statistic_transform_kinds():
    for s in ("kendall", "spearman", "r_major", "interpoint", "covariance_W"):
        statistic_transform(s, 200, 100)
    with pytest.raises(ValueError):
        statistic_transform("nope", 200, 100)
