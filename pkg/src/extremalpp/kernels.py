"""Symmetric pairwise statistics ``T_ij = g_n(x_i, x_j)``.

Every kernel comes in (up to) three flavours:

* a per-pair production function (``kendall_tau``, ``spearman_rho``, ...),
* a slow reference used as a test oracle (``*_bruteforce``),
* an all-pairs batch path over a ``(p, n)`` matrix (``*_matrix``), returning a
  symmetric ``(p, p)`` array.  These are what the experiments call.

Ties are rejected everywhere: rank statistics are only distribution-free for
continuous data, and silently mid-ranking would break the exact null laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "TieError",
    "Kernel",
    "ScoreSpec",
    "CovEntryStats",
    "ranks",
    "relative_ranks",
    "count_inversions",
    "kendall_concordance",
    "kendall_concordance_bruteforce",
    "kendall_tau",
    "kendall_tau_bruteforce",
    "spearman_rho",
    "spearman_rho_relative",
    "r_major",
    "r_major_bruteforce",
    "simple_linear_rank",
    "standardize_simple_linear",
    "interpoint_distance",
    "cov_entries",
    "rank_matrix",
    "kendall_matrix",
    "spearman_matrix",
    "r_major_matrix",
    "interpoint_matrix",
    "cov_W_matrix",
    "KENDALL",
    "SPEARMAN",
    "R_MAJOR",
    "INTERPOINT",
]


class TieError(ValueError):
    """Raised when a row that must be tie-free contains equal entries."""


def _as_row(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-d vector")
    if np.isnan(x).any():
        raise ValueError("NaN in input row")
    return x


def _same_length(x, y):
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")


def ranks(row) -> np.ndarray:
    """1-based ranks ``Q_t = #{s : row_s <= row_t}``.

    >>> ranks([3.1, -2, 7]).tolist()
    [2, 1, 3]
    """
    x = _as_row(row)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    eq = np.flatnonzero(xs[1:] == xs[:-1])
    if eq.size:
        a, b = sorted((int(order[eq[0]]), int(order[eq[0] + 1])))
        raise TieError(f"tied entries at positions {a} and {b} (value {x[a]!r})")
    q = np.empty(x.size, dtype=np.int64)
    q[order] = np.arange(1, x.size + 1)
    return q


def relative_ranks(q_i, q_j) -> np.ndarray:
    """``R^(t) = Q_{j,t'}`` where ``Q_{i,t'} = t``: rank in row j at the spot row i has rank t."""
    q_i = np.asarray(q_i, dtype=np.int64)
    q_j = np.asarray(q_j, dtype=np.int64)
    _same_length(q_i, q_j)
    r = np.empty_like(q_j)
    r[q_i - 1] = q_j
    return r


def count_inversions(seq: Sequence[int]) -> int:
    """Number of pairs ``s < t`` with ``seq[s] > seq[t]``, by merge sort in O(n log n)."""
    a = list(seq)
    buf = a[:]
    inv = 0
    width = 1
    n = len(a)
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[i] <= a[j]:
                    buf[k] = a[i]
                    i += 1
                else:
                    buf[k] = a[j]
                    inv += mid - i
                    j += 1
                k += 1
            buf[k:hi] = a[i:mid] + a[j:hi]
        a, buf = buf, a
        width *= 2
    return inv


def _pair_ranks(x_i, x_j, min_n=2):
    x_i, x_j = _as_row(x_i), _as_row(x_j)
    _same_length(x_i, x_j)
    if x_i.size < min_n:
        raise ValueError(f"need n >= {min_n}, got n={x_i.size}")
    return ranks(x_i), ranks(x_j)


def kendall_concordance(x_i, x_j) -> int:
    """Integer ``S = sum_{s<t} sign(x_is - x_it) sign(x_js - x_jt) = C(n,2) - 2 I``.

    ``I`` is the inversion count of the relative ranks.
    """
    q_i, q_j = _pair_ranks(x_i, x_j)
    n = q_i.size
    inv = count_inversions(relative_ranks(q_i, q_j).tolist())
    return n * (n - 1) // 2 - 2 * inv


def kendall_concordance_bruteforce(x_i, x_j) -> int:
    """O(n^2) sign-pair sum; test oracle for :func:`kendall_concordance`."""
    x_i, x_j = _as_row(x_i), _as_row(x_j)
    _same_length(x_i, x_j)
    ranks(x_i), ranks(x_j)
    a, b = x_i.tolist(), x_j.tolist()
    n = len(a)
    total = 0
    for s in range(n):
        for t in range(s + 1, n):
            total += ((a[s] > a[t]) - (a[s] < a[t])) * ((b[s] > b[t]) - (b[s] < b[t]))
    return total


def kendall_tau(x_i, x_j) -> float:
    """Kendall's tau via inversion counting of the relative ranks."""
    n = len(x_i)
    return kendall_concordance(x_i, x_j) / (n * (n - 1) / 2)


def kendall_tau_bruteforce(x_i, x_j, exact=False):
    n = len(x_i)
    s = kendall_concordance_bruteforce(x_i, x_j)
    return Fraction(2 * s, n * (n - 1)) if exact else s / (n * (n - 1) / 2)


def spearman_rho(x_i, x_j) -> float:
    """Spearman's rho as the correlation of the centered ranks."""
    q_i, q_j = _pair_ranks(x_i, x_j)
    qn = (q_i.size + 1) / 2.0
    a = q_i - qn
    b = q_j - qn
    return float(a @ b / math.sqrt((a @ a) * (b @ b)))


def spearman_rho_relative(x_i, x_j) -> float:
    """The relative-rank form ``12/(n(n^2-1)) sum_k (k - q)(R^(k) - q)``."""
    q_i, q_j = _pair_ranks(x_i, x_j)
    n = q_i.size
    r = relative_ranks(q_i, q_j)
    k = np.arange(1, n + 1)
    # integer arithmetic: (2k - n - 1)(2R - n - 1) = 4 (k - q)(R - q)
    num = int(((2 * k - n - 1) * (2 * r - n - 1)).sum())
    return 3.0 * num / (n * (n * n - 1))


def r_major(x_i, x_j) -> float:
    """Major part of Spearman's rho via ``r = ((n + 1) rho - 3 tau) / (n - 2)``."""
    n = len(x_i)
    if n < 3:
        raise ValueError(f"r_major needs n >= 3, got n={n}")
    return ((n + 1) * spearman_rho_relative(x_i, x_j) - 3.0 * kendall_tau(x_i, x_j)) / (n - 2)


def r_major_bruteforce(x_i, x_j) -> float:
    """Literal triple sum over distinct ``(t1, t2, t3)``; keep n small (cubic memory)."""
    x_i, x_j = _as_row(x_i), _as_row(x_j)
    _same_length(x_i, x_j)
    n = x_i.size
    if n < 3:
        raise ValueError(f"r_major needs n >= 3, got n={n}")
    ranks(x_i), ranks(x_j)
    si = np.sign(x_i[:, None] - x_i[None, :])
    sj = np.sign(x_j[:, None] - x_j[None, :])
    idx = np.arange(n)
    distinct = (
        (idx[:, None, None] != idx[None, :, None])
        & (idx[:, None, None] != idx[None, None, :])
        & (idx[None, :, None] != idx[None, None, :])
    )
    terms = si[:, :, None] * sj[:, None, :]
    total = int(terms[distinct].sum())
    return 3.0 * total / (n * (n - 1) * (n - 2))


@dataclass(frozen=True)
class ScoreSpec:
    """Score ``g`` and regression function ``f`` with ``c_nt = f(t/(n+1)) / n``.

    Both should be Lipschitz; :meth:`lipschitz_ok` is an advisory grid check.
    """

    g: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]

    def constants(self, n: int) -> np.ndarray:
        t = np.arange(1, n + 1) / (n + 1)
        return np.broadcast_to(np.asarray(self.f(t), dtype=float), (n,)) / n

    def scores(self, n: int) -> np.ndarray:
        t = np.arange(1, n + 1) / (n + 1)
        return np.broadcast_to(np.asarray(self.g(t), dtype=float), (n,)).copy()

    def lipschitz_ok(self, bound: float = 100.0, points: int = 1000) -> bool:
        u = np.linspace(0, 1, points + 2)[1:-1]
        for fn in (self.g, self.f):
            v = np.broadcast_to(np.asarray(fn(u), dtype=float), u.shape)
            if np.max(np.abs(np.diff(v) / np.diff(u))) > bound:
                return False
        return True

    def condition_ratios(self, n: int) -> tuple:
        """The two ratios the large-deviation tail bound requires to stay O(1).

        Returns ``(n^{2/3} max|c - cbar|^2 / S2, n |S3|^2 / S2^3)`` where ``Sk`` is
        the k-th central power sum of the regression constants.  Bounded
        ratios are the requirement; no constant is certified here.
        """
        c = self.constants(n)
        dc = c - c.mean()
        s2 = float(dc @ dc)
        s3 = float((dc**3).sum())
        return n ** (2 / 3) * float(np.max(dc**2)) / s2, n * s3**2 / s2**3


def simple_linear_rank(x_i, x_j, score: ScoreSpec) -> float:
    """``V = sum_t c_nt g(R^(t) / (n + 1))``."""
    q_i, q_j = _pair_ranks(x_i, x_j)
    n = q_i.size
    c = score.constants(n)
    if not np.sum((c - c.mean()) ** 2) > 0:
        raise ValueError("regression constants are degenerate (zero variance)")
    r = relative_ranks(q_i, q_j)
    return float(c @ score.scores(n)[r - 1])


def standardize_simple_linear(score: ScoreSpec, n: int) -> tuple:
    """Exact null mean and standard deviation of :func:`simple_linear_rank`.

    ``E V = gbar sum_t c_t`` and
    ``Var V = (n-1)^{-1} sum_t (g_t - gbar)^2 sum_s (c_s - cbar)^2`` with
    ``gbar``, ``cbar`` the plain averages.
    """
    c = score.constants(n)
    g = score.scores(n)
    mu = float(g.mean() * c.sum())
    var = float(((g - g.mean()) ** 2).sum() * ((c - c.mean()) ** 2).sum() / (n - 1))
    if not var > 0:
        raise ValueError("sigma_V = 0: the score or the regression constants are constant")
    return mu, math.sqrt(var)


def interpoint_distance(x_i, x_j) -> float:
    """Squared Euclidean distance ``||x_i - x_j||^2``."""
    x_i, x_j = _as_row(x_i), _as_row(x_j)
    _same_length(x_i, x_j)
    d = x_i - x_j
    return float(d @ d)


@dataclass(frozen=True)
class CovEntryStats:
    sigma_hat: float
    theta_hat: float
    M: float
    W: float


def _W_from_M(M, n, p):
    lp = np.log(p)
    return 0.5 * (n * M**2 - 4.0 * lp + np.log(lp) + np.log(8.0 * np.pi))


def cov_entries(matrix, i: int, j: int, sigma_true: float = 0.0) -> CovEntryStats:
    """Empirical covariance of series ``i`` and ``j`` and its studentized transform.

    ``matrix`` is ``(p, n)``: row k is the series of coordinate k over n samples.
    """
    data = getattr(matrix, "data", matrix)
    data = np.asarray(data, dtype=float)
    p, n = data.shape
    if not i < j:
        raise ValueError(f"need i < j, got i={i}, j={j}")
    if n < 2:
        raise ValueError("need n >= 2")
    xi = data[i] - data[i].mean()
    xj = data[j] - data[j].mean()
    prod = xi * xj
    sigma_hat = float(prod.mean())
    theta_hat = float(((prod - sigma_hat) ** 2).mean())
    if not theta_hat > 0:
        raise ValueError(f"theta_hat = {theta_hat} for pair ({i}, {j}); products are constant")
    M = abs(sigma_hat - sigma_true) / math.sqrt(theta_hat)
    return CovEntryStats(sigma_hat, theta_hat, M, float(_W_from_M(M, n, p)))


# -- all-pairs batch paths ----------------------------------------------------------


def rank_matrix(X) -> np.ndarray:
    """Row-wise 1-based ranks of a ``(..., n)`` array; raises on ties."""
    X = np.asarray(X, dtype=float)
    order = np.argsort(X, axis=-1)
    xs = np.take_along_axis(X, order, axis=-1)
    if np.any(xs[..., 1:] == xs[..., :-1]):
        loc = np.argwhere(xs[..., 1:] == xs[..., :-1])[0]
        raise TieError(f"tied entries in row {tuple(int(v) for v in loc[:-1])}")
    q = np.empty(X.shape, dtype=np.int64)
    np.put_along_axis(q, order, np.arange(1, X.shape[-1] + 1), axis=-1)
    return q


def _pair_signs(X) -> np.ndarray:
    n = X.shape[-1]
    s, t = np.triu_indices(n, 1)
    # float32 holds the +-1 entries and the integer Gram sums (< 2^24) exactly
    return np.sign(X[..., s] - X[..., t]).astype(np.float32)


def kendall_concordance_matrix(X) -> np.ndarray:
    """Integer concordance matrix ``S_ij``; exact for ``n(n-1)/2 < 2^24``."""
    X = np.asarray(X, dtype=float)
    rank_matrix(X)
    n = X.shape[-1]
    if n * (n - 1) // 2 >= 2**24:
        raise ValueError("n too large for the exact float32 concordance path")
    S = _pair_signs(X)
    return np.rint(S @ S.T).astype(np.int64)


def kendall_matrix(X) -> np.ndarray:
    n = np.shape(X)[-1]
    return kendall_concordance_matrix(X) / (n * (n - 1) / 2)


def _spearman_int(X):
    n = X.shape[-1]
    c = 2 * rank_matrix(X) - (n + 1)
    c = c.astype(np.float64)
    # entries |c| <= n, sums < 2^53: exact
    return np.rint(c @ c.T).astype(np.int64)


def spearman_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    n = X.shape[-1]
    return 3.0 * _spearman_int(X) / (n * (n * n - 1))


def r_major_matrix(X, rho=None, tau=None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    n = X.shape[-1]
    if n < 3:
        raise ValueError(f"r_major needs n >= 3, got n={n}")
    rho = spearman_matrix(X) if rho is None else rho
    tau = kendall_matrix(X) if tau is None else tau
    return ((n + 1) * rho - 3.0 * tau) / (n - 2)


def interpoint_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def cov_W_matrix(X, sigma_true=0.0) -> np.ndarray:
    """Matrix of ``W_ij`` (diagonal left as NaN); ``sigma_true`` scalar or ``(p, p)``."""
    X = np.asarray(X, dtype=float)
    p, n = X.shape
    Xc = X - X.mean(axis=1, keepdims=True)
    S = Xc @ Xc.T / n
    Q = Xc * Xc
    # (1/n) sum (prod - S)^2 = (1/n) sum prod^2 - S^2
    theta = Q @ Q.T / n - S * S
    off = ~np.eye(p, dtype=bool)
    if np.any(theta[off] <= 0):
        raise ValueError("theta_hat <= 0 for some pair; products are constant")
    M = np.abs(S - sigma_true) / np.sqrt(np.where(off, theta, 1.0))
    W = _W_from_M(M, n, p)
    W[~off] = np.nan
    return W


@dataclass(frozen=True)
class Kernel:
    """A symmetric function of ``arity`` data vectors.

    ``func`` evaluates one tuple of 1-d rows.  ``batch`` (optional) evaluates
    tuples of stacked rows: each argument is ``(B, n)`` and the result ``(B,)``.
    ``pairwise`` (optional, arity 2 only) maps a ``(p, n)`` matrix to the
    symmetric ``(p, p)`` kernel matrix.
    """

    name: str
    func: Callable[..., float]
    arity: int = 2
    batch: Optional[Callable[..., np.ndarray]] = None
    pairwise: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, *rows) -> float:
        return self.func(*rows)

    def evaluate_batch(self, *blocks) -> np.ndarray:
        if self.batch is not None:
            return np.asarray(self.batch(*blocks), dtype=float)
        return np.array([self.func(*rows) for rows in zip(*blocks)], dtype=float)


def _kendall_batch(A, B):
    sa, sb = _pair_signs(A), _pair_signs(B)
    n = A.shape[-1]
    rank_matrix(A), rank_matrix(B)
    return np.einsum("ij,ij->i", sa, sb, dtype=np.float64) / (n * (n - 1) / 2)


def _spearman_batch(A, B):
    n = A.shape[-1]
    ca = 2 * rank_matrix(A) - (n + 1)
    cb = 2 * rank_matrix(B) - (n + 1)
    return 3.0 * np.einsum("ij,ij->i", ca, cb) / (n * (n * n - 1))


def _r_major_batch(A, B):
    n = A.shape[-1]
    return ((n + 1) * _spearman_batch(A, B) - 3.0 * _kendall_batch(A, B)) / (n - 2)


def _interpoint_batch(A, B):
    d = A - B
    return np.einsum("ij,ij->i", d, d)


KENDALL = Kernel("kendall", kendall_tau, 2, _kendall_batch, kendall_matrix)
SPEARMAN = Kernel("spearman", spearman_rho_relative, 2, _spearman_batch, spearman_matrix)
R_MAJOR = Kernel("r_major", r_major, 2, _r_major_batch, r_major_matrix)
INTERPOINT = Kernel("interpoint", interpoint_distance, 2, _interpoint_batch, interpoint_matrix)


def simple_linear_kernel(score: ScoreSpec, name: str = "custom_score") -> Kernel:
    def batch(A, B):
        n = A.shape[-1]
        c = score.constants(n)
        g = score.scores(n)
        qa, qb = rank_matrix(A), rank_matrix(B)
        r = np.empty_like(qb)
        np.put_along_axis(r, qa - 1, qb, axis=-1)
        return g[r - 1] @ c

    def pairwise(X):
        n = X.shape[-1]
        c = score.constants(n)
        g = score.scores(n)
        q = rank_matrix(X)
        # V_ij = sum_s c[Q_is - 1] g[Q_js - 1]; not symmetric unless f = g, so the
        # i < j orientation is mirrored into the lower triangle
        V = c[q - 1] @ g[q - 1].T
        U = np.triu(V, 1)
        return U + U.T

    return Kernel(name, lambda a, b: simple_linear_rank(a, b, score), 2, batch, pairwise)
