"""Exact finite-n null distributions of Kendall's tau and Spearman's rho."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "EXACT_LIMIT",
    "ExactPmf",
    "mahonian_counts",
    "kendall_pmf",
    "inversion_mgf",
    "inversion_mgf_from_counts",
    "exact_rho_pmf",
    "MGF_SAFE_EXPONENT",
]

EXACT_LIMIT = 60
MGF_SAFE_EXPONENT = 700.0


@dataclass(frozen=True)
class ExactPmf:
    """Finite-support law.

    In ``exact_integer_counts`` mode ``counts`` are integers summing to
    ``total`` and ``support`` holds :class:`~fractions.Fraction` values; in
    ``normalized_float`` mode ``counts`` are floats and ``total`` is their sum.
    """

    support: tuple
    counts: tuple
    total: object
    arithmetic: str = "exact_integer_counts"
    error_bound: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def exact(self) -> bool:
        return self.arithmetic == "exact_integer_counts"

    @property
    def probs(self) -> np.ndarray:
        return np.array([c / self.total for c in self.counts], dtype=float)

    def exact_probs(self) -> list:
        if not self.exact:
            raise ValueError("exact probabilities need integer-count mode")
        return [Fraction(c, self.total) for c in self.counts]

    def moment(self, k: int):
        if self.exact:
            return sum(Fraction(c, self.total) * v**k for v, c in zip(self.support, self.counts))
        s = np.array(self.support, dtype=float)
        return float((self.probs * s**k).sum())

    def mean(self):
        return self.moment(1)

    def variance(self):
        return self.moment(2) - self.mean() ** 2

    def cdf(self, x) -> float:
        s = np.array([float(v) for v in self.support])
        return float(self.probs[s <= x].sum())

    def to_csv(self, fh=None) -> str:
        """``value,count,probability`` rows; 17 significant digits for floats."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "count", "probability"])
        for v, c, pr in zip(self.support, self.counts, self.probs):
            count = str(c) if self.exact else format(c, ".17g")
            w.writerow([format(float(v), ".17g"), count, format(pr, ".17g")])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


@lru_cache(maxsize=None)
def _mahonian_exact(n: int) -> tuple:
    counts = [1]
    for j in range(2, n + 1):
        # convolve with the block (1, ..., 1) of length j via a sliding window sum
        new_len = len(counts) + j - 1
        out = [0] * new_len
        window = 0
        for k in range(new_len):
            if k < len(counts):
                window += counts[k]
            if k - j >= 0:
                window -= counts[k - j]
            out[k] = window
        counts = out
    return tuple(counts)


def _mahonian_float(n: int) -> tuple:
    """Max-normalized convolution; returns (relative counts, log of scale, error bound)."""
    counts = np.ones(1)
    log_scale = 0.0
    for j in range(2, n + 1):
        # out[k] = sum_{i=k-j+1}^{k} counts[i] as a difference of padded prefix sums
        c = np.concatenate([np.zeros(j), np.cumsum(counts)])
        c = np.concatenate([c, np.full(j - 1, c[-1])])
        out = c[j:] - c[:-j]
        top = out.max()
        counts = out / top
        log_scale += math.log(top)
    # each of the n - 1 passes costs a few ulps per entry relative to the max
    err = 4.0 * n * counts.size * np.finfo(float).eps
    return counts, log_scale, err


def mahonian_counts(n: int):
    """Number of permutations of n elements with k inversions, k = 0..n(n-1)/2.

    Exact Python integers for n <= EXACT_LIMIT; beyond that a float array
    scaled so its largest entry is 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n <= EXACT_LIMIT:
        return list(_mahonian_exact(n))
    return _mahonian_float(n)[0]


def kendall_pmf(n: int) -> ExactPmf:
    """Null law of tau: ``1 - 4k/(n(n-1))`` with probability ``mahonian(n)[k] / n!``, ascending."""
    if n < 2:
        raise ValueError("kendall_pmf needs n >= 2")
    K = n * (n - 1) // 2
    support = tuple(Fraction(n * (n - 1) - 4 * k, n * (n - 1)) for k in range(K, -1, -1))
    if n <= EXACT_LIMIT:
        counts = tuple(reversed(_mahonian_exact(n)))
        return ExactPmf(support, counts, math.factorial(n), meta={"n": n, "statistic": "kendall"})
    rel, _, err = _mahonian_float(n)
    counts = tuple(float(c) for c in rel[::-1])
    return ExactPmf(support, counts, float(sum(counts)), "normalized_float", err,
                    meta={"n": n, "statistic": "kendall"})


def _factor(j: int, t: float) -> float:
    if j == 1:
        return 1.0
    if abs(t) < 1e-6:
        # MGF of Uniform{0..j-1} to second order
        m1 = (j - 1) / 2.0
        m2 = (j - 1) * (2 * j - 1) / 6.0
        return 1.0 + m1 * t + 0.5 * m2 * t * t
    return math.expm1(j * t) / (j * math.expm1(t))


def inversion_mgf(n: int, t: float) -> float:
    """``E exp(t I_n) = prod_{j=1}^n (1 - e^{jt}) / (j (1 - e^t))``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if t * n * (n - 1) / 2 > MGF_SAFE_EXPONENT:
        safe = MGF_SAFE_EXPONENT / max(n * (n - 1) / 2, 1)
        raise OverflowError(f"MGF overflows for n={n}, t={t}; use t <= {safe:.6g}")
    out = 1.0
    for j in range(1, n + 1):
        out *= _factor(j, t)
    return out


def inversion_mgf_from_counts(n: int, t: float) -> float:
    """PMF-side evaluation ``sum_k counts[k] e^{tk} / n!``."""
    counts = mahonian_counts(n)
    total = math.factorial(n)
    return math.fsum(c / total * math.exp(t * k) for k, c in enumerate(counts))


def exact_rho_pmf(n: int) -> ExactPmf:
    """Null law of Spearman's rho by enumerating all n! relative-rank permutations."""
    if n > 8:
        raise ValueError(f"exact_rho_pmf enumerates n! permutations; n <= 8 required, got {n}")
    if n < 2:
        raise ValueError("exact_rho_pmf needs n >= 2")
    denom = n * (n * n - 1)
    tally = {}
    ident = range(1, n + 1)
    for perm in itertools.permutations(ident):
        d2 = sum((a - b) ** 2 for a, b in zip(ident, perm))
        rho = Fraction(denom - 6 * d2, denom)
        tally[rho] = tally.get(rho, 0) + 1
    support = tuple(sorted(tally))
    return ExactPmf(support, tuple(tally[v] for v in support), math.factorial(n),
                    meta={"n": n, "statistic": "spearman"})
