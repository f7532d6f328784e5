"""Regularized functional canonical correlation.

For a covariance ``Sigma`` split into blocks and a fixed ``alpha > 0``,

    R_1 = (alpha I_1 + S11)^(-1/2) S12 (alpha I_2 + S22)^(-1) S21 (alpha I_1 + S11)^(-1/2)

and ``R_2`` mirrors the indices.  The regularized squared principal canonical
correlation is the top eigenvalue of either ``R_j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import (
    DegenerateEigenspaceError,
    apply_fn,
    divided_differences,
    inverse_power,
)
from .operators import BlockStructure, SpectralDecomposition, fix_sign, hermitian, spectral

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class FunctionalSample:
    """``n`` observations stored as rows of basis coefficients."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError(f"sample data must be 2-d (n x M), got shape {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def sample_moments(s: FunctionalSample) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and the ``1/n``-normalized sample covariance operator."""
    if s.n < 2:
        raise ValueError(f"need at least 2 observations, got {s.n}")
    mean = s.data.mean(axis=0)
    xc = s.data - mean
    return mean, hermitian(xc.T @ xc / s.n)


@dataclass(frozen=True)
class _Side:
    """Cached ingredients of ``R_j`` oriented so that ``j`` is the outer block."""

    c: np.ndarray  # S_jk, compact m_j x m_k
    dj: SpectralDecomposition  # of S_jj
    dk: SpectralDecomposition  # of S_kk
    f1: np.ndarray  # (alpha + S_jj)^(-1/2)
    f2: np.ndarray  # (alpha + S_kk)^(-1)
    gamma1: np.ndarray  # divided differences of phi_1 at S_jj
    gamma2: np.ndarray  # divided differences of phi_2 at S_kk


@dataclass(frozen=True)
class RegularizedBlocks:
    """Blocks of ``alpha I + Sigma`` in the zero-padded full frame."""

    alpha: float
    structure: BlockStructure
    cov: np.ndarray
    _sides: dict = field(default_factory=dict, repr=False, compare=False)

    def _pad(self, j, k, add_alpha=False):
        s = self.structure
        sub = s.compact(self.cov, j, k)
        if add_alpha:
            sub = sub + self.alpha * np.eye(s.size(j))
        return s.embed(sub, j, k)

    @property
    def s11(self) -> np.ndarray:
        return self._pad(1, 1, True)

    @property
    def s22(self) -> np.ndarray:
        return self._pad(2, 2, True)

    @property
    def s12(self) -> np.ndarray:
        return self._pad(1, 2)

    @property
    def s21(self) -> np.ndarray:
        return self._pad(2, 1)

    def side(self, j: int) -> _Side:
        if j not in (1, 2):
            raise ValueError(f"block index must be 1 or 2, got {j}")
        if j not in self._sides:
            k = 3 - j
            st = self.structure
            dj = spectral(st.compact(self.cov, j))
            dk = spectral(st.compact(self.cov, k))
            phi1 = inverse_power(self.alpha, 1)
            phi2 = inverse_power(self.alpha, 2)
            self._sides[j] = _Side(
                c=st.compact(self.cov, j, k),
                dj=dj,
                dk=dk,
                f1=apply_fn(phi1, None, dj),
                f2=apply_fn(phi2, None, dk),
                gamma1=divided_differences(phi1, dj)[0],
                gamma2=divided_differences(phi2, dk)[0],
            )
        return self._sides[j]


def regularize(cov, s: BlockStructure, alpha: float) -> RegularizedBlocks:
    if not alpha > 0:
        raise ValueError("regularization parameter must be positive")
    cov = hermitian(cov)
    if cov.shape != (s.dim, s.dim):
        raise ValueError(f"covariance of shape {cov.shape} does not match block structure of dim {s.dim}")
    return RegularizedBlocks(alpha=float(alpha), structure=s, cov=cov)


def r_compact(blocks: RegularizedBlocks, j: int) -> np.ndarray:
    """``R_j`` restricted to block ``j`` (an ``m_j x m_j`` matrix)."""
    sd = blocks.side(j)
    w = sd.f1 @ sd.c
    return hermitian(w @ sd.f2 @ w.T)


def build_r(blocks: RegularizedBlocks, j: int) -> np.ndarray:
    return blocks.structure.embed(r_compact(blocks, j), j)


def _leading(r: np.ndarray) -> tuple[float, float, np.ndarray]:
    w, v = np.linalg.eigh(r)
    lam1 = float(w[-1])
    lam2 = float(w[-2]) if len(w) > 1 else -np.inf
    if not lam1 - lam2 > DEGENERACY_TOL * abs(lam1):
        raise DegenerateEigenspaceError(
            f"degenerate leading eigenspace (top eigenvalues {lam1:.6g}, {lam2:.6g})"
        )
    return lam1, lam2, fix_sign(v[:, -1])


@dataclass(frozen=True)
class RfccaFit:
    """Result of a regularized functional CCA fit.

    ``f1``/``f2`` are the unit-norm canonical weight functions (maximizers of
    the regularized Rayleigh quotient); ``g1``/``g2`` are the unit top
    eigenvectors of ``R_1``/``R_2`` from which they are obtained via
    ``f_j ~ (alpha I_j + S_jj)^(-1/2) g_j``.  The sign of ``f2`` is chosen so
    that ``<f1, S12 f2> >= 0``.
    """

    rho2: float
    f1: np.ndarray
    f2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    alpha: float
    blocks: RegularizedBlocks
    rho2_r2: float
    gap: float

    def g(self, j: int) -> np.ndarray:
        return self.g1 if j == 1 else self.g2

    def f(self, j: int) -> np.ndarray:
        return self.f1 if j == 1 else self.f2

    def r(self, j: int) -> np.ndarray:
        return self.r1 if j == 1 else self.r2


def fit_cov(cov, split: BlockStructure, alpha: float) -> RfccaFit:
    """Fit from a given covariance operator (sample or population)."""
    blocks = regularize(cov, split, alpha)
    st = blocks.structure
    out = {}
    for j in (1, 2):
        r = r_compact(blocks, j)
        lam1, lam2, g = _leading(r)
        f = blocks.side(j).f1 @ g
        out[j] = (r, lam1, lam1 - lam2, g, fix_sign(f / np.linalg.norm(f)))
    f1 = st.embed_vector(out[1][4], 1)
    f2 = st.embed_vector(out[2][4], 2)
    if f1 @ blocks.cov @ f2 < 0:
        f2 = -f2
    return RfccaFit(
        rho2=out[1][1],
        f1=f1,
        f2=f2,
        g1=st.embed_vector(out[1][3], 1),
        g2=st.embed_vector(out[2][3], 2),
        r1=st.embed(out[1][0], 1),
        r2=st.embed(out[2][0], 2),
        alpha=blocks.alpha,
        blocks=blocks,
        rho2_r2=out[2][1],
        gap=out[1][2],
    )


def fit(s: FunctionalSample, split: BlockStructure, alpha: float) -> RfccaFit:
    _, cov = sample_moments(s)
    return fit_cov(cov, split, alpha)


def rayleigh_quotient(cov, split: BlockStructure, alpha: float, f1, f2) -> float:
    """The regularized squared correlation of the pair ``(f1, f2)``."""
    cov = np.asarray(cov, dtype=float)
    f1 = np.asarray(f1, dtype=float)[split.indices(1)]
    f2 = np.asarray(f2, dtype=float)[split.indices(2)]
    c = split.compact(cov, 1, 2)
    num = (f1 @ c @ f2) ** 2
    den = (alpha * f1 @ f1 + f1 @ split.compact(cov, 1) @ f1) * (alpha * f2 @ f2 + f2 @ split.compact(cov, 2) @ f2)
    return float(num / den)


@dataclass(frozen=True)
class OracleConfig:
    restarts: int = 20
    iters: int = 200
    tol: float = 1e-10
    seed: int = 0


def rayleigh_oracle(cov, split: BlockStructure, alpha: float, config: OracleConfig = OracleConfig()) -> float:
    """Maximize the regularized Rayleigh quotient directly.

    Alternates the two closed-form partial maximizations (each a linear
    solve) from random starts and keeps the best value.  Test-support only.
    """
    cov = hermitian(cov)
    a11 = split.compact(cov, 1) + alpha * np.eye(split.size(1))
    a22 = split.compact(cov, 2) + alpha * np.eye(split.size(2))
    c = split.compact(cov, 1, 2)
    if not np.any(c):
        return 0.0
    rng = np.random.default_rng(config.seed)
    best = 0.0
    for _ in range(config.restarts):
        f2 = rng.standard_normal(split.size(2))
        val = 0.0
        for _ in range(config.iters):
            f1 = np.linalg.solve(a11, c @ f2)
            f1 /= np.linalg.norm(f1)
            f2 = np.linalg.solve(a22, c.T @ f1)
            f2 /= np.linalg.norm(f2)
            new = (f1 @ c @ f2) ** 2 / ((f1 @ a11 @ f1) * (f2 @ a22 @ f2))
            done = abs(new - val) <= config.tol * max(new, 1e-300)
            val = new
            if done:
                break
        best = max(best, float(val))
    return best


def variate_scores(s: FunctionalSample, fitted: RfccaFit) -> tuple[np.ndarray, np.ndarray]:
    """Canonical variates ``<X_i, f1>`` and ``<X_i, f2>`` for each observation."""
    if s.dim != len(fitted.f1):
        raise ValueError(f"sample dimension {s.dim} does not match fit dimension {len(fitted.f1)}")
    return s.data @ fitted.f1, s.data @ fitted.f2
