"""Empirical point process of a symmetric kernel over all index tuples.

Points are ``(i / p, T_i)`` for every strictly increasing m-tuple ``i`` of
row indices (1-based).  Built-in arity-2 kernels with a ``pairwise`` fast
path are evaluated as one ``(p, p)`` matrix; any other kernel is called once
per tuple.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .kernels import Kernel
from .scaling import IDENTITY, Affine

__all__ = [
    "EmpiricalPointProcess",
    "RecordSequence",
    "TooFewRecords",
    "build_process",
    "count_exceedances",
    "top_k",
    "record_times",
    "record_times_from_values",
    "record_times_bruteforce",
    "record_gap_normalized",
    "expected_record_count",
]


class TooFewRecords(ValueError):
    """A record-gap statistic was requested from fewer than two records."""


@dataclass(frozen=True)
class EmpiricalPointProcess:
    """Finite point process, stored sorted by value.

    ``indices[k]`` is the 1-based index tuple of the point with value
    ``values[k]``; ``values`` is ascending.
    """

    m: int
    p: int
    n: int
    indices: np.ndarray
    values: np.ndarray

    def __len__(self):
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.indices / self.p

    def points(self) -> Iterator[tuple]:
        for idx, v in zip(self.indices, self.values):
            yield tuple(float(i) / self.p for i in idx), float(v)


def _apply_transform(transform, v):
    if transform is None:
        return np.asarray(v, dtype=float)
    return np.asarray(transform(v), dtype=float)


def _data(matrix):
    return np.asarray(getattr(matrix, "data", matrix), dtype=float)


def _tuple_values(X, kernel: Kernel, tuples) -> np.ndarray:
    out = np.empty(len(tuples))
    for k, tup in enumerate(tuples):
        try:
            out[k] = kernel(*(X[i] for i in tup))
        except Exception as exc:
            raise type(exc)(f"kernel {kernel.name!r} failed on tuple {tuple(i + 1 for i in tup)}: {exc}") from exc
    return out


def build_process(matrix, kernel: Kernel, transform: Optional[Affine] = IDENTITY) -> EmpiricalPointProcess:
    X = _data(matrix)
    p, n = X.shape
    m = kernel.arity
    if m > p:
        raise ValueError(f"kernel arity {m} exceeds p={p}")
    if m == 2 and kernel.pairwise is not None:
        T = np.asarray(kernel.pairwise(X), dtype=float)
        i, j = np.triu_indices(p, 1)
        idx = np.column_stack([i, j])
        vals = T[i, j]
    else:
        tuples = list(itertools.combinations(range(p), m))
        idx = np.array(tuples, dtype=np.int64).reshape(-1, m)
        vals = _tuple_values(X, kernel, tuples)
    vals = _apply_transform(transform, vals)
    order = np.argsort(vals, kind="stable")
    return EmpiricalPointProcess(m, p, n, idx[order] + 1, vals[order])


def count_exceedances(pp: EmpiricalPointProcess, threshold: float) -> int:
    """Number of points with value strictly above ``threshold``."""
    return int(pp.values.size - np.searchsorted(pp.values, threshold, side="right"))


def top_k(pp: EmpiricalPointProcess, k: int) -> np.ndarray:
    if not 1 <= k <= len(pp):
        raise ValueError(f"k must be in [1, {len(pp)}], got {k}")
    return pp.values[::-1][:k].copy()


@dataclass(frozen=True)
class RecordSequence:
    """Record times ``L(1) < L(2) < ...`` (prefix sizes) and the running maxima there.

    ``L(1) = m``: the first prefix that contains a full tuple.
    """

    times: tuple
    values: tuple

    @property
    def zeta(self) -> int:
        return len(self.times)


def record_times_from_values(T) -> RecordSequence:
    """Records of ``j -> max_{i<j} T[i, j]`` for a precomputed arity-2 kernel matrix.

    Column ``j`` holds exactly the tuples whose largest index is ``j``, so the
    running maximum is updated one column at a time.
    """
    T = np.asarray(T, dtype=float)
    p = T.shape[0]
    times, values = [], []
    run = -math.inf
    for j in range(1, p):
        v = T[:j, j].max()
        if v > run:
            run = v
            times.append(j + 1)
            values.append(float(v))
    return RecordSequence(tuple(times), tuple(values))


def record_times(matrix, kernel: Kernel, transform: Optional[Affine] = IDENTITY) -> RecordSequence:
    """Record times of the running maximum over tuples inside ``{1..j}``, j = m..p.

    For each j only the tuples containing j as largest index are evaluated, so
    every tuple is evaluated once.  Record times are invariant under increasing
    transforms; ``transform`` only changes the reported values.
    """
    X = _data(matrix)
    p = X.shape[0]
    m = kernel.arity
    if m > p:
        raise ValueError(f"kernel arity {m} exceeds p={p}")
    scale_sign = 1.0 if transform is None else math.copysign(1.0, transform.scale)
    if scale_sign < 0:
        raise ValueError("record_times needs an increasing transform")
    times, values = [], []
    run = -math.inf
    for j in range(m - 1, p):
        if m == 2 and kernel.batch is not None:
            block = np.repeat(X[j][None, :], j, axis=0)
            vals = kernel.evaluate_batch(X[:j], block)
        else:
            tuples = [c + (j,) for c in itertools.combinations(range(j), m - 1)]
            vals = _tuple_values(X, kernel, tuples)
        v = float(_apply_transform(transform, vals.max()))
        if v > run:
            run = v
            times.append(j + 1)
            values.append(v)
    return RecordSequence(tuple(times), tuple(values))


def record_times_bruteforce(matrix, kernel: Kernel) -> RecordSequence:
    """Recompute every prefix maximum from scratch; an O(p C(p, m)) test oracle."""
    X = _data(matrix)
    p = X.shape[0]
    m = kernel.arity
    times, values = [], []
    prev = -math.inf
    for j in range(m, p + 1):
        cur = max(kernel(*(X[i] for i in tup)) for tup in itertools.combinations(range(j), m))
        if cur > prev:
            times.append(j)
            values.append(float(cur))
        prev = cur if cur > prev else prev
    return RecordSequence(tuple(times), tuple(values))


def record_gap_normalized(rec: RecordSequence, p: int) -> tuple:
    """``(L(zeta)/p, L(zeta-1)/p, (L(zeta) - L(zeta-1))/p)``."""
    if rec.zeta < 2:
        raise TooFewRecords(f"need at least 2 records, got {rec.zeta}")
    last, second = rec.times[-1], rec.times[-2]
    return last / p, second / p, (last - second) / p


def expected_record_count(p: int, m: int = 2) -> float:
    """Exact ``E zeta = 1 + sum_{j=m+1}^p m / j`` for exchangeable data vectors.

    The maximal tuple of a prefix of size j contains vector j with probability
    ``m / j`` by exchangeability, whatever the dependence between the points.
    """
    return 1.0 + sum(m / j for j in range(m + 1, p + 1))
