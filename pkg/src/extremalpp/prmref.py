"""Limit objects: Poisson random measures, their order statistics and record laws.

The three extreme-value PRMs are the images of unit-rate Poisson arrivals
``Gamma_1 < Gamma_2 < ...`` under a decreasing map:

    Frechet(alpha):  Gamma^(-1/alpha)
    Weibull(alpha): -Gamma^(1/alpha)
    Gumbel:         -log Gamma

``mu(x)`` below is the tail mean measure ``mu(x, w)``: the expected number of
limit points above ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .datagen import make_rng

__all__ = [
    "LimitFamily",
    "GUMBEL",
    "GammaPoints",
    "sample_gamma",
    "prm_transform",
    "mean_measure",
    "limit_cdf",
    "orderstat_k_cdf",
    "record_last_cdf",
    "record_joint_cdf",
    "record_gap_cdf",
    "sample_prm",
    "sample_limit_records",
]


@dataclass(frozen=True)
class LimitFamily:
    kind: str = "gumbel"
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("gumbel", "frechet", "weibull"):
            raise ValueError(f"unknown limit family {self.kind!r}")
        if self.kind != "gumbel" and not (self.alpha is not None and self.alpha > 0):
            raise ValueError(f"{self.kind} needs alpha > 0")

    @classmethod
    def parse(cls, text: str) -> "LimitFamily":
        """``"gumbel"``, ``"frechet:2"``, ``"weibull:1.5"`` (case-insensitive)."""
        kind, _, arg = text.strip().lower().partition(":")
        return cls(kind, float(arg) if arg else None)

    def __str__(self):
        return self.kind if self.alpha is None else f"{self.kind}:{self.alpha!r}"

    @property
    def support(self) -> tuple:
        if self.kind == "gumbel":
            return (-math.inf, math.inf)
        if self.kind == "frechet":
            return (0.0, math.inf)
        return (-math.inf, 0.0)

    def mu(self, x):
        """Tail mean measure, with ``mu = inf`` below and ``0`` above the support."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.kind == "gumbel":
                out = np.exp(-x)
            elif self.kind == "frechet":
                out = np.where(x > 0, np.abs(x) ** -self.alpha, np.inf)
            else:
                out = np.where(x < 0, np.abs(x) ** self.alpha, 0.0)
        return out if out.ndim else float(out)

    def transform(self, gammas):
        g = np.asarray(gammas, dtype=float)
        if self.kind == "gumbel":
            return -np.log(g)
        if self.kind == "frechet":
            return g ** (-1.0 / self.alpha)
        return -(g ** (1.0 / self.alpha))

    def inverse_transform(self, x):
        """Gamma level corresponding to value ``x`` (so points above x have Gamma below it)."""
        return self.mu(x)


GUMBEL = LimitFamily("gumbel")


@dataclass(frozen=True)
class GammaPoints:
    gammas: np.ndarray

    def __post_init__(self):
        g = self.gammas
        if g.size == 0 or g[0] <= 0 or np.any(np.diff(g) <= 0):
            raise ValueError("gammas must be positive and strictly increasing")

    def __len__(self):
        return self.gammas.size


def sample_gamma(k: int, seed, *, size: Optional[int] = None):
    """First ``k`` arrival times of a unit-rate Poisson process.

    With ``size`` given, returns a ``(size, k)`` array of independent prefixes
    instead (one row per replication) for vectorized checks.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    if size is None:
        return GammaPoints(np.cumsum(rng.standard_exponential(k)))
    return np.cumsum(rng.standard_exponential((size, k)), axis=1)


def prm_transform(g, fam: LimitFamily) -> np.ndarray:
    """Map Poisson arrivals to the family's PRM points, largest first."""
    gammas = g.gammas if isinstance(g, GammaPoints) else np.asarray(g, dtype=float)
    return fam.transform(gammas)


def mean_measure(fam: LimitFamily, r: float, s: float) -> float:
    """``mu(r, s] = mu(r) - mu(s)`` for ``r < s`` inside the support."""
    lo, hi = fam.support
    if not r < s:
        raise ValueError(f"need r < s, got r={r}, s={s}")
    if fam.kind == "frechet" and r <= 0:
        raise ValueError("Frechet mean measure needs r > 0")
    if fam.kind == "weibull" and s > 0:
        raise ValueError("Weibull mean measure needs s <= 0")
    return float(fam.mu(r) - fam.mu(s))


def limit_cdf(fam: LimitFamily, x):
    """``exp(-mu(x))``: the limit law of the maximum."""
    return np.exp(-np.asarray(fam.mu(x), dtype=float)) if np.ndim(x) else math.exp(-fam.mu(x))


def orderstat_k_cdf(fam: LimitFamily, k: int, x):
    """``P(k-th largest point <= x) = P(Poisson(mu(x)) <= k - 1)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    mu = np.asarray(fam.mu(x), dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        term = np.ones_like(mu)
        total = np.ones_like(mu)
        for j in range(1, k):
            term = term * mu / j
            total = total + term
        out = np.where(np.isinf(mu), 0.0, np.exp(-mu) * total)
    return out if out.ndim else float(out)


# -- record-time laws ---------------------------------------------------------------
#
# ``order`` is the tuple arity m.  The time marks of the limit PRM are uniform
# on the simplex, so the record times form a PRM on (0, 1] with mean measure
# order * log(b / a).  order=1 gives the classical laws x, y + y log(x/y) and
# x (1 - log x).


def _check_unit(*vals):
    for v in vals:
        if not 0 < v <= 1:
            raise ValueError(f"argument {v} outside (0, 1]")


def record_last_cdf(x, order: int = 1):
    """``P(last record time <= x) = P(J(x, 1] = 0) = x^order``."""
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) | (x > 1)):
        raise ValueError("arguments must lie in (0, 1]")
    out = x**order
    return out if out.ndim else float(out)


def record_joint_cdf(x: float, y: float, order: int = 1) -> float:
    """``P(last <= x, second-last <= y)``; equals ``record_last_cdf(min(x, y))`` when ``x <= y``."""
    _check_unit(x, y)
    if x > y:
        return y**order * (1.0 + order * math.log(x / y))
    return x**order


def record_gap_cdf(x, order: int = 1):
    """``P(last - second-last <= x)`` on (0, 1].

    ``1 - int_x^1 order (u - x)^order / u du``; for order 1 this is
    ``x (1 - log x)`` and for order 2 ``4x - 3x^2 + 2x^2 log x``.
    """
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) | (x > 1)):
        raise ValueError("arguments must lie in (0, 1]")
    lx = np.log(x)
    if order == 1:
        out = x * (1.0 - lx)
    else:
        # int_x^1 (u - x)^m / u du = sum_{k<m} C(m,k) (-x)^k (1 - x^{m-k})/(m-k) + (-x)^m (-log x)
        tail = (-x) ** order * (-lx)
        for k in range(order):
            tail = tail + math.comb(order, k) * (-x) ** k * (1.0 - x ** (order - k)) / (order - k)
        out = 1.0 - order * tail
    return out if out.ndim else float(out)


def sample_prm(fam: LimitFamily, floor: float, rng, max_points: int = 10**7) -> np.ndarray:
    """All limit points above ``floor``, largest first.

    The arrivals needed are exactly those with ``Gamma < mu(floor)``, so the
    count is Poisson(mu(floor)) and drawn up front.
    """
    level = float(fam.mu(floor))
    if not math.isfinite(level):
        raise ValueError(f"floor {floor} has infinite mean measure")
    count = int(rng.poisson(level))
    if count > max_points:
        raise ValueError(f"{count} points above floor {floor}; raise the floor")
    gammas = np.sort(rng.random(count) * level)
    return fam.transform(gammas)


def sample_limit_records(order: int, rng, floor: float = -8.0) -> np.ndarray:
    """Record times on (0, 1] of ``t -> sup{Delta_i : U_i^(order) <= t}`` for the Gumbel PRM.

    Time marks ``U_i`` are sorted uniforms (uniform on the simplex); only the
    largest coordinate matters.  Points below ``floor`` are ignored, which only
    loses records at times where every point seen so far is below the floor.
    """
    values = sample_prm(GUMBEL, floor, rng)
    times = np.sort(rng.random((values.size, order)), axis=1)[:, -1]
    order_t = np.argsort(times)
    t, v = times[order_t], values[order_t]
    running = np.maximum.accumulate(v) if v.size else v
    is_rec = np.ones(v.size, dtype=bool)
    is_rec[1:] = v[1:] > running[:-1]
    return t[is_rec]
