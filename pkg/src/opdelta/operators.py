"""Finite-rank Hilbert-space objects.

Everything lives in one fixed orthonormal basis of dimension ``M``: vectors are
length-``M`` coefficient arrays, Hermitian operators are dense symmetric
``M x M`` arrays.  Block operators are kept zero-padded in the full frame so
that compositions are plain matrix products.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

DEFAULT_GROUP_TOL = 1e-8


class SpectralError(np.linalg.LinAlgError):
    """Raised when a symmetric eigendecomposition cannot be obtained."""


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def hermitian(a) -> np.ndarray:
    """Return ``(a + a.T) / 2`` as a float array; rejects non-square input."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def hs_inner(u, v) -> float:
    """Hilbert-Schmidt inner product ``sum_k <U e_k, V e_k>``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_same_dim(u, v)
    return float(np.sum(u * v))


def hs_norm(u) -> float:
    return float(np.sqrt(hs_inner(u, u)))


def tensor(f, g) -> np.ndarray:
    """Tensor product ``f (x) g``, the rank-one map ``h -> <g, h> f``."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.ndim != 1 or f.shape != g.shape:
        raise ValueError(f"dimension mismatch: {f.shape} vs {g.shape}")
    return np.outer(f, g)


@dataclass(frozen=True)
class BlockStructure:
    """Orthogonal split of the coordinates into ``[0, split)`` and ``[split, dim)``."""

    dim: int
    split: int

    def __post_init__(self):
        if not 1 <= self.split < self.dim:
            raise ValueError(f"split must satisfy 1 <= split < dim, got split={self.split}, dim={self.dim}")

    def indices(self, j: int) -> slice:
        if j == 1:
            return slice(0, self.split)
        if j == 2:
            return slice(self.split, self.dim)
        raise ValueError(f"block index must be 1 or 2, got {j}")

    def size(self, j: int) -> int:
        return self.split if j == 1 else self.dim - self.split

    def projection(self, j: int) -> np.ndarray:
        p = np.zeros((self.dim, self.dim))
        idx = self.indices(j)
        p[idx, idx] = np.eye(self.size(j))
        return p

    def compact(self, t: np.ndarray, j: int, k: int | None = None) -> np.ndarray:
        """Sub-matrix of rows in block ``j`` and columns in block ``k`` (default ``j``)."""
        k = j if k is None else k
        return np.asarray(t)[self.indices(j), self.indices(k)]

    def embed(self, sub: np.ndarray, j: int, k: int | None = None) -> np.ndarray:
        k = j if k is None else k
        out = np.zeros((self.dim, self.dim))
        out[self.indices(j), self.indices(k)] = sub
        return out

    def embed_vector(self, sub: np.ndarray, j: int) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices(j)] = sub
        return out


def block(t, s: BlockStructure, j: int, k: int) -> np.ndarray:
    """``Pi_j T Pi_k`` embedded in the full frame."""
    t = np.asarray(t, dtype=float)
    if t.shape != (s.dim, s.dim):
        raise ValueError(f"operator of shape {t.shape} does not match block structure of dim {s.dim}")
    out = np.zeros_like(t)
    out[s.indices(j), s.indices(k)] = t[s.indices(j), s.indices(k)]
    return out


def fix_sign(v: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude coordinate positive (lowest index on ties)."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigendecomposition with numerically coincident eigenvalues grouped.

    ``values`` and ``vectors`` hold the individual eigenpairs sorted in
    decreasing order; ``labels[i]`` is the group of eigenpair ``i``.  Each
    group's eigenvalue is the mean of its members.
    """

    values: np.ndarray
    vectors: np.ndarray
    labels: np.ndarray
    group_values: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.values)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=len(self.group_values))

    @property
    def grouped_values(self) -> np.ndarray:
        """Per-eigenpair eigenvalue after grouping (length ``dim``)."""
        return self.group_values[self.labels]

    @cached_property
    def projections(self) -> list[np.ndarray]:
        out = []
        for g in range(len(self.group_values)):
            u = self.vectors[:, self.labels == g]
            out.append(u @ u.T)
        return out

    @property
    def groups(self) -> list[tuple[float, np.ndarray, int]]:
        mult = self.multiplicities
        return [(float(lam), p, int(m)) for lam, p, m in zip(self.group_values, self.projections, mult)]

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.grouped_values) @ self.vectors.T


def spectral(t, group_tol: float = DEFAULT_GROUP_TOL) -> SpectralDecomposition:
    """Grouped spectral decomposition of a symmetric operator.

    Consecutive eigenvalues closer than ``group_tol * max(1, ||T||)`` are
    merged into one group.  Rank-one eigenvectors follow the
    :func:`fix_sign` convention.
    """
    if group_tol < 0:
        raise ValueError("group_tol must be nonnegative")
    t = hermitian(t)
    if not np.all(np.isfinite(t)):
        raise SpectralError("operator has non-finite entries")
    try:
        w, v = np.linalg.eigh(t)
    except np.linalg.LinAlgError as exc:
        norm = hs_norm(t)
        raise SpectralError(f"eigensolver failed (dim={t.shape[0]}, ||T||_HS={norm:.3e}): {exc}") from exc
    w = w[::-1]
    v = v[:, ::-1].copy()
    scale = max(1.0, float(np.max(np.abs(w))) if len(w) else 1.0)
    labels = np.zeros(len(w), dtype=int)
    for i in range(1, len(w)):
        labels[i] = labels[i - 1] + (w[i - 1] - w[i] > group_tol * scale)
    n_groups = labels[-1] + 1 if len(w) else 0
    group_values = np.array([w[labels == g].mean() for g in range(n_groups)])
    mult = np.bincount(labels, minlength=n_groups)
    for i in range(len(w)):
        if mult[labels[i]] == 1:
            v[:, i] = fix_sign(v[:, i])
    return SpectralDecomposition(values=w, vectors=v, labels=labels, group_values=group_values)
