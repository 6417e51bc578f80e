"""Seeded generation of the p x n data matrices used by every experiment.

Row ``i`` of a :class:`SampleMatrix` is the vector ``x_i`` (length ``n``); the
``p`` rows are the points fed to the symmetric kernels.  Generators of the
``linear process`` and ``matrix model`` kind make the coordinates within each
column dependent, as in the sample-covariance examples; their columns remain
iid copies.

Nothing here certifies that a model satisfies the moment and correlation
conditions under which covariance maxima are Gumbel in the limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "MarginalSpec",
    "SampleMatrix",
    "LinearModelSpec",
    "derive_seed",
    "make_rng",
    "gen_iid_matrix",
    "gen_linear_process",
    "gen_matrix_model",
]

_KINDS = ("standard_normal", "uniform01", "student_t", "rademacher_smoothed")


@dataclass(frozen=True)
class MarginalSpec:
    """Distribution of a single entry.

    ``param`` is the degrees of freedom for ``student_t`` and the noise scale
    for ``rademacher_smoothed``; it is ignored otherwise.
    """

    kind: str = "standard_normal"
    param: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown marginal kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "student_t":
            if self.param is None or not self.param > 2:
                raise ValueError(
                    f"student_t needs df > 2 for a finite variance, got df={self.param}"
                )
        if self.kind == "rademacher_smoothed":
            if self.param is None or not self.param > 0:
                raise ValueError("rademacher_smoothed needs a positive noise scale")

    @classmethod
    def parse(cls, text: str) -> "MarginalSpec":
        """Parse ``"standard_normal"``, ``"student_t:5"``, ``"rademacher_smoothed:1e-9"``."""
        kind, _, arg = text.strip().partition(":")
        return cls(kind, float(arg) if arg else None)

    def __str__(self):
        return self.kind if self.param is None else f"{self.kind}:{self.param!r}"

    @property
    def mean(self) -> float:
        return 0.5 if self.kind == "uniform01" else 0.0

    @property
    def variance(self) -> float:
        if self.kind == "standard_normal":
            return 1.0
        if self.kind == "uniform01":
            return 1.0 / 12.0
        if self.kind == "student_t":
            return self.param / (self.param - 2.0)
        return 1.0 + self.param**2

    def fourth_moment(self) -> float:
        """E[Z^4] of the standardized (mean 0, variance 1) marginal."""
        if self.kind == "standard_normal":
            return 3.0
        if self.kind == "uniform01":
            return 9.0 / 5.0
        if self.kind == "student_t":
            df = self.param
            if df <= 4:
                return float("inf")
            return 3.0 * (df - 2.0) / (df - 4.0)
        e2 = self.param**2
        # (B + eN)^4 with B = +-1, N ~ N(0,1): 1 + 6e^2 + 3e^4, over var^2
        return (1.0 + 6.0 * e2 + 3.0 * e2**2) / (1.0 + e2) ** 2

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "standard_normal":
            return rng.standard_normal(size)
        if self.kind == "uniform01":
            return rng.random(size)
        if self.kind == "student_t":
            return rng.standard_t(self.param, size)
        signs = 2.0 * rng.integers(0, 2, size=size) - 1.0
        return signs + self.param * rng.standard_normal(size)

    def draw_standardized(self, rng: np.random.Generator, size) -> np.ndarray:
        return (self.draw(rng, size) - self.mean) / np.sqrt(self.variance)


@dataclass(frozen=True)
class SampleMatrix:
    """``p`` data vectors of length ``n``, stored as a read-only ``(p, n)`` array."""

    data: np.ndarray
    seed: int
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError("SampleMatrix data must be 2-dimensional")
        self.data.setflags(write=False)

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.data[i]


@dataclass(frozen=True)
class LinearModelSpec:
    """Either a filter ``coeffs = (a_0, ..., a_J)`` or a p x p symmetric ``matrix``."""

    coeffs: Optional[tuple] = None
    matrix: Optional[np.ndarray] = None
    innovation: MarginalSpec = MarginalSpec()

    def __post_init__(self):
        if (self.coeffs is None) == (self.matrix is None):
            raise ValueError("give exactly one of coeffs or matrix")


def derive_seed(master: int, *key: int) -> int:
    """Deterministic 64-bit child seed for ``(master, *key)``.

    Uses ``SeedSequence`` spawn keys, so the child for replication ``r`` does
    not depend on how many other children were drawn or in which order.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def _check_dims(p, n):
    if p < 2 or n < 2:
        raise ValueError(f"need p >= 2 and n >= 2, got p={p}, n={n}")


def gen_iid_matrix(spec: MarginalSpec, p: int, n: int, seed: int) -> SampleMatrix:
    """p x n matrix of iid entries with marginal ``spec``."""
    _check_dims(p, n)
    data = spec.draw(make_rng(seed), (p, n))
    return SampleMatrix(data, seed, {"generator": "iid", "marginal": str(spec)})


def gen_linear_process(model: LinearModelSpec, p: int, n: int, seed: int) -> SampleMatrix:
    """Columns are iid copies of ``X_i = sum_j a_j eps_{i-j}``, i = 1..p.

    The infinite moving average is truncated at the supplied ``J = len(coeffs) - 1``;
    the truncation error is the caller's responsibility.  Entries are scaled by
    ``1 / sqrt(sum a_j^2)`` so every coordinate has unit variance.
    """
    _check_dims(p, n)
    if model.coeffs is None:
        raise ValueError("gen_linear_process needs the coeffs form of LinearModelSpec")
    a = np.asarray(model.coeffs, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("coeffs must be a non-empty 1-d sequence")
    ss = float(a @ a)
    if not ss > 0:
        raise ValueError("coefficient vector is all zero")
    J = a.size - 1
    rng = make_rng(seed)
    # eps[k, :] holds innovations eps_{k-J}, ..., eps_{p}; column k is one copy
    eps = model.innovation.draw_standardized(rng, (n, p + J))
    # X_i = sum_j a_j eps_{i-j}: a valid-mode correlation with the reversed filter
    out = np.empty((n, p))
    for j in range(J + 1):
        if j == 0:
            out[:] = a[0] * eps[:, J : J + p]
        else:
            out += a[j] * eps[:, J - j : J - j + p]
    scale = 1.0 / np.sqrt(ss)
    data = np.ascontiguousarray((out * scale).T)
    info = {"generator": "linear_process", "J": J, "rescale": scale,
            "innovation": str(model.innovation)}
    return SampleMatrix(data, seed, info)


def gen_matrix_model(model: LinearModelSpec, p: int, n: int, seed: int) -> SampleMatrix:
    """Columns are iid draws of ``A_norm @ eps`` with eps a vector of p iid innovations.

    Rows of ``A`` are rescaled to unit Euclidean norm first; the per-row factors
    are returned in ``info["row_rescale"]`` rather than rejecting the input.
    """
    _check_dims(p, n)
    if model.matrix is None:
        raise ValueError("gen_matrix_model needs the matrix form of LinearModelSpec")
    A = normalized_rows(model.matrix, p)
    rng = make_rng(seed)
    eps = model.innovation.draw_standardized(rng, (p, n))
    data = A @ eps
    info = {"generator": "matrix_model", "innovation": str(model.innovation),
            "row_rescale": (1.0 / np.linalg.norm(np.asarray(model.matrix, float), axis=1)).tolist()}
    return SampleMatrix(data, seed, info)


def normalized_rows(matrix, p: Optional[int] = None) -> np.ndarray:
    """Validate a symmetric square matrix and return it with unit-norm rows."""
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if p is not None and A.shape[0] != p:
        raise ValueError(f"A is {A.shape[0]}x{A.shape[0]} but p={p}")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12):
        raise ValueError("A must be symmetric")
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms == 0):
        raise ValueError(f"A has a zero row at index {int(np.argmin(norms))}")
    return A / norms[:, None]


def model_covariance(matrix) -> np.ndarray:
    """Covariance ``A_norm A_norm^T`` of one column of :func:`gen_matrix_model` output."""
    A = normalized_rows(matrix)
    return A @ A.T


def tridiagonal(p: int, diag: float, off: float) -> np.ndarray:
    return diag * np.eye(p) + off * (np.eye(p, k=1) + np.eye(p, k=-1))
