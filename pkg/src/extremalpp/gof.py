"""Goodness-of-fit machinery for the Monte Carlo checks, plus tail and
anti-clustering estimators.

The tests here are one-sample tests against fully specified limit laws; no
parameters are estimated, so the asymptotic null distributions apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .datagen import derive_seed, make_rng
from .kernels import Kernel
from .scaling import IDENTITY, Affine

__all__ = [
    "EcdfSummary",
    "TestReport",
    "Estimate",
    "A2Report",
    "kolmogorov_sf",
    "ks_statistic",
    "ks_test",
    "poisson_count_test",
    "estimate_A1",
    "estimate_A2",
]

DEFAULT_ALPHA = 0.001


@dataclass(frozen=True)
class EcdfSummary:
    sample: np.ndarray

    @classmethod
    def of(cls, values) -> "EcdfSummary":
        s = np.sort(np.asarray(values, dtype=float))
        if s.size < 1:
            raise ValueError("empty sample")
        return cls(s)

    @property
    def size(self) -> int:
        return self.sample.size

    def __call__(self, x):
        return np.searchsorted(self.sample, x, side="right") / self.size


@dataclass(frozen=True)
class TestReport:
    statistic: float
    p_value: float
    R: int
    method: str
    alpha: float = DEFAULT_ALPHA
    extra: dict = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting the class

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p_value {self.p_value} outside [0, 1]")

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha

    def as_dict(self) -> dict:
        d = {"method": self.method, "statistic": self.statistic, "p_value": self.p_value,
             "R": self.R, "alpha": self.alpha, "pass": self.passed}
        d.update(self.extra)
        return d

    def to_text(self) -> str:
        """Flat ``key=value`` lines."""
        lines = []
        for k, v in self.as_dict().items():
            if isinstance(v, float):
                v = format(v, ".17g")
            elif isinstance(v, bool):
                v = str(v).lower()
            lines.append(f"{k}={v}")
        return "\n".join(lines) + "\n"


def kolmogorov_sf(lam: float, tol: float = 1e-10) -> float:
    """``P(K > lam)`` for the Kolmogorov distribution.

    Uses ``2 sum (-1)^{k-1} exp(-2 k^2 lam^2)`` for ``lam >= 1`` and the
    theta-function form of the CDF below; both are cut at the first term
    smaller than ``tol``.
    """
    if lam <= 0:
        return 1.0
    if lam >= 1.0:
        total, k = 0.0, 1
        while True:
            term = math.exp(-2.0 * k * k * lam * lam)
            total += term if k % 2 else -term
            if term < tol:
                break
            k += 1
        return min(1.0, max(0.0, 2.0 * total))
    # P(K <= lam) = sqrt(2 pi)/lam sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 lam^2))
    c = math.sqrt(2.0 * math.pi) / lam
    total, k = 0.0, 1
    while True:
        term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * lam * lam))
        total += term
        if c * term < tol:
            break
        k += 1
    return min(1.0, max(0.0, 1.0 - c * total))


def ks_statistic(sample, cdf: Callable) -> float:
    """``sup |F_R - F|``, attained at the sample points (left and right limits)."""
    x = np.sort(np.asarray(sample, dtype=float))
    if np.isnan(x).any():
        raise ValueError("NaN in sample")
    R = x.size
    F = np.asarray(cdf(x), dtype=float)
    hi = np.arange(1, R + 1) / R - F
    lo = F - np.arange(0, R) / R
    return float(max(hi.max(), lo.max()))


def ks_test(sample, cdf: Callable, alpha: float = DEFAULT_ALPHA, label: str = "") -> TestReport:
    """One-sample Kolmogorov-Smirnov test with the asymptotic p-value at ``sqrt(R) D``."""
    x = np.asarray(sample, dtype=float)
    if np.isnan(x).any():
        raise ValueError("NaN in sample")
    if x.size < 10:
        raise ValueError(f"ks_test needs at least 10 observations, got {x.size}")
    D = ks_statistic(x, cdf)
    p = kolmogorov_sf(math.sqrt(x.size) * D)
    extra = {"against": label} if label else {}
    return TestReport(D, p, int(x.size), "ks_one_sample_asymptotic", alpha, extra)


def _poisson_bins(lam: float, R: int):
    """Cells {0}, {1}, ..., {K-1}, {>=K} with the tail merged until every expected count >= 5."""
    edges = [0, 1, 2, 3]  # lower edges; last cell is open
    while True:
        probs = [stats.poisson.pmf(k, lam) for k in edges[:-1]] + [stats.poisson.sf(edges[-1] - 1, lam)]
        expected = np.array(probs) * R
        if len(edges) <= 2 or expected.min() >= 5:
            return edges, np.array(probs)
        lo_small = expected[:-1].argmin() if expected[:-1].min() < 5 else None
        if expected[-1] < 5 or lo_small is None:
            edges = edges[:-1]
        else:
            # merge a sparse low cell into its right neighbour
            del edges[lo_small + 1]


def poisson_count_test(counts, lam: float, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Chi-square fit of exceedance counts to Poisson(``lam``) over cells {0, 1, 2, >=3}.

    Cells are merged until every expected count is at least 5.  The
    dispersion index variance/mean is reported alongside.
    """
    c = np.asarray(counts)
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if c.size < 200:
        raise ValueError(f"poisson_count_test needs at least 200 counts, got {c.size}")
    if np.any(c < 0) or np.any(c != np.floor(c)):
        raise ValueError("counts must be nonnegative integers")
    R = c.size
    edges, probs = _poisson_bins(lam, R)
    observed = [np.sum((c >= lo) & (c < hi)) for lo, hi in zip(edges[:-1], edges[1:])]
    observed.append(np.sum(c >= edges[-1]))
    observed = np.array(observed, dtype=float)
    expected = probs * R
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    df = len(observed) - 1
    p = float(stats.chi2.sf(chi2, df)) if df > 0 else 1.0
    mean = float(c.mean())
    dispersion = float(c.var(ddof=1) / mean) if mean > 0 else float("nan")
    extra = {"lambda": lam, "df": df, "dispersion": dispersion, "mean": mean,
             "cells": ",".join(str(e) for e in edges) + "+"}
    return TestReport(chi2, p, R, "poisson_chi_square", alpha, extra)


# -- condition estimators -------------------------------------------------------------

Generator = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    draws: int

    def within(self, target: float, k: float) -> bool:
        return abs(self.value - target) <= k * self.stderr


@dataclass(frozen=True)
class A2Report:
    """Per overlap size ``l``: scaled joint exceedance and the independence ratio."""

    l: int
    scaled: Estimate
    joint: float
    marginal: float
    ratio: float
    ratio_stderr: float
    flagged: bool

    def as_dict(self) -> dict:
        return {"l": self.l, "scaled": self.scaled.value, "scaled_stderr": self.scaled.stderr,
                "joint": self.joint, "marginal": self.marginal, "ratio": self.ratio,
                "ratio_stderr": self.ratio_stderr, "flagged": self.flagged,
                "draws": self.scaled.draws}


def _transformed(kernel: Kernel, transform, blocks):
    v = kernel.evaluate_batch(*blocks)
    return v if transform is None else np.asarray(transform(v), dtype=float)


def estimate_A1(kernel: Kernel, transform: Optional[Affine], generator: Generator,
                x: float, reps: int, p: int, seed: int = 0, block: int = 20000) -> Estimate:
    """``C(p, m) P(T > x)`` from ``reps`` tuples of fresh independent vectors.

    Work is split into blocks of ``block`` tuples, each with its own derived
    seed, so the result depends only on ``(seed, reps, block)``.
    """
    if reps < 100:
        raise ValueError("estimate_A1 needs reps >= 100")
    m = kernel.arity
    hits = 0
    done = 0
    b = 0
    while done < reps:
        size = min(block, reps - done)
        rng = make_rng(derive_seed(seed, 1, b))
        blocks = [generator(rng, size) for _ in range(m)]
        hits += int(np.sum(_transformed(kernel, transform, blocks) > x))
        done += size
        b += 1
    scale = math.comb(p, m)
    q = hits / reps
    return Estimate(scale * q, scale * math.sqrt(q * (1 - q) / reps), reps)


def estimate_A2(kernel: Kernel, transform: Optional[Affine], generator: Generator,
                x: float, reps: int, p: int, seed: int = 0, spokes: int = 1000) -> list:
    """Joint exceedance of two tuples sharing ``l`` vectors, ``l = 1..m-1``.

    Each replication draws ``l`` shared vectors and ``spokes`` independent
    groups of ``m - l`` vectors.  Every pair of distinct groups gives two
    overlapping tuples; with ``c`` exceeding tuples in a replication the
    unbiased joint-probability estimate is ``c (c - 1) / (spokes (spokes - 1))``.
    The scaled value is ``p^(2m - l)`` times that; the ratio joint/marginal^2
    is the stable diagnostic for pairwise independent kernels.
    """
    if reps < 100:
        raise ValueError("estimate_A2 needs reps >= 100")
    if spokes < 2:
        raise ValueError("need at least 2 spokes")
    m = kernel.arity
    if m < 2:
        raise ValueError("A2 needs arity >= 2")
    out = []
    for l in range(1, m):
        c = np.empty(reps)
        for r in range(reps):
            rng = make_rng(derive_seed(seed, 2, l, r))
            hub = [np.repeat(generator(rng, 1), spokes, axis=0) for _ in range(l)]
            arms = [generator(rng, spokes) for _ in range(m - l)]
            c[r] = np.sum(_transformed(kernel, transform, hub + arms) > x)
        pairs = spokes * (spokes - 1)
        jvals = c * (c - 1) / pairs
        mvals = c / spokes
        joint = float(jvals.mean())
        marg = float(mvals.mean())
        scale = float(p) ** (2 * m - l)
        scaled = Estimate(scale * joint, scale * float(jvals.std(ddof=1)) / math.sqrt(reps), reps * spokes)
        if marg > 0 and joint > 0:
            ratio = joint / marg**2
            # delta method on (mean jvals, mean mvals)
            cov = np.cov(np.vstack([jvals, mvals]), ddof=1) / reps
            grad = np.array([1.0 / marg**2, -2.0 * joint / marg**3])
            ratio_se = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
        else:
            ratio, ratio_se = (float("nan"), float("nan"))
        flagged = joint > 0 and scaled.value >= 1.0
        out.append(A2Report(l, scaled, joint, marg, ratio, ratio_se, flagged))
    return out
