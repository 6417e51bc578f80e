"""Centering and scaling sequences, exact null moments, and the affine transform."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "Affine",
    "ScalingConstants",
    "d_of",
    "interpoint_constants",
    "tau_variance",
    "rho_variance",
    "r_variance",
    "rank_transform",
    "scaling_constants",
]


@dataclass(frozen=True)
class Affine:
    """``v -> scale * (v - center)``."""

    center: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.scale == 0:
            raise ValueError("affine scale must be nonzero")

    def __call__(self, v):
        return self.scale * (np.asarray(v, dtype=float) - self.center)

    def inverse(self, y):
        return np.asarray(y, dtype=float) / self.scale + self.center


IDENTITY = Affine()


def d_of(count) -> float:
    """``sqrt(2 log c) - (log log c + log 4 pi) / (2 sqrt(2 log c))`` at ``c = count``.

    Gumbel normalization for the maximum of ``count`` iid standard normals.
    """
    if count < 3:
        raise ValueError(f"d_of needs count >= 3, got {count}")
    L = math.log(count)
    root = math.sqrt(2.0 * L)
    return root - (math.log(L) + math.log(4.0 * math.pi)) / (2.0 * root)


def interpoint_constants(n: int, p: int, ex4: float) -> tuple:
    """``(b_n, c_n)`` for ``c_n (D_ij - b_n)``, with ``d`` taken at ``p(p-1)/2``."""
    if ex4 < 1:
        raise ValueError(f"E[X^4] >= 1 for unit-variance data (Jensen), got {ex4}")
    if n < 1 or p < 3:
        raise ValueError("need n >= 1 and p >= 3")
    d = d_of(p * (p - 1) // 2)
    root = math.sqrt(2.0 * n * (ex4 + 1.0))
    return 2.0 * n + root * d, d / root


def tau_variance(n: int, exact: bool = False):
    if n < 2:
        raise ValueError("tau_variance needs n >= 2")
    v = Fraction(2 * (2 * n + 5), 9 * n * (n - 1))
    return v if exact else float(v)


def rho_variance(n: int, exact: bool = False):
    if n < 2:
        raise ValueError("rho_variance needs n >= 2")
    v = Fraction(1, n - 1)
    return v if exact else float(v)


def r_variance(n: int, exact: bool = False):
    if n < 3:
        raise ValueError("r_variance needs n >= 3")
    v = Fraction(n * n - 3, n * (n - 1) * (n - 2))
    return v if exact else float(v)


def rank_transform(mean: float, sd: float, count: int) -> Affine:
    """Affine map for ``d (v~ - d)`` with ``v~ = (v - mean)/sd`` and ``d = d_of(count)``."""
    d = d_of(count)
    return Affine(center=mean + d * sd, scale=d / sd)


_STANDARD_SD = {
    "kendall": lambda n: math.sqrt(tau_variance(n)),
    "spearman": lambda n: math.sqrt(rho_variance(n)),
    "r_major": lambda n: math.sqrt(r_variance(n)),
}


@dataclass(frozen=True)
class ScalingConstants:
    n: int
    p: int
    p_tilde: int
    d_p: float
    tau_var: float
    rho_var: float
    r_var: float
    b_n: float
    c_n: float
    ex4: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def scaling_constants(n: int, p: int, ex4: float = 3.0) -> ScalingConstants:
    pt = p * (p - 1) // 2
    b, c = interpoint_constants(n, p, ex4)
    return ScalingConstants(
        n=n, p=p, p_tilde=pt, d_p=d_of(pt),
        tau_var=tau_variance(n), rho_var=rho_variance(n),
        r_var=r_variance(n) if n >= 3 else float("nan"),
        b_n=b, c_n=c, ex4=ex4,
    )


def statistic_transform(statistic: str, n: int, p: int, ex4: float = 3.0) -> Affine:
    """Transform that puts a built-in statistic on the Gumbel scale."""
    if statistic in _STANDARD_SD:
        return rank_transform(0.0, _STANDARD_SD[statistic](n), p * (p - 1) // 2)
    if statistic == "interpoint":
        b, c = interpoint_constants(n, p, ex4)
        return Affine(b, c)
    if statistic == "covariance_W":
        return IDENTITY
    raise ValueError(f"no built-in transform for statistic {statistic!r}")
