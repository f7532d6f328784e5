"""Delta-method limits for the regularized canonical correlation.

``limit_map`` is the derivative of ``Sigma -> R_j(Sigma)`` in a direction
``G``: five terms, one per factor of ``R_j``, with the two inverse-power
factors differentiated through :func:`frechet_apply`.  The asymptotic
variance of ``sqrt(n) (rho2_hat - rho2)`` is ``<K, Sigma_HS K>_HS`` where
``K`` represents ``G -> <limit_map(G) g, g>`` through the Hilbert-Schmidt
inner product.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .calculus import frechet_apply, reduced_resolvent
from .fcca import FunctionalSample, RegularizedBlocks, RfccaFit, r_compact, sample_moments
from .operators import hermitian, spectral

logger = logging.getLogger(__name__)


def _blocks_of(g: np.ndarray, blocks: RegularizedBlocks, j: int):
    st = blocks.structure
    k = 3 - j
    return st.compact(g, j), st.compact(g, j, k), st.compact(g, k)


def limit_terms(blocks: RegularizedBlocks, j: int, g) -> list[np.ndarray]:
    """The five terms of the limit operator, compact on block ``j``.

    Term ``i`` replaces factor ``i`` of ``R_j`` by its derivative along ``G``.
    """
    g = hermitian(g)
    sd = blocks.side(j)
    gjj, gjk, gkk = _blocks_of(g, blocks, j)
    d1 = frechet_apply(sd.gamma1, sd.dj.vectors, gjj)
    d2 = frechet_apply(sd.gamma2, sd.dk.vectors, gkk)
    f1, f2, c = sd.f1, sd.f2, sd.c
    tail = c @ f2 @ c.T @ f1
    head = f1 @ c @ f2 @ c.T
    return [
        d1 @ tail,
        f1 @ gjk @ f2 @ c.T @ f1,
        f1 @ c @ d2 @ c.T @ f1,
        f1 @ c @ f2 @ gjk.T @ f1,
        head @ d1,
    ]


def limit_map(blocks: RegularizedBlocks, j: int, g) -> np.ndarray:
    """Derivative of ``R_j`` along the symmetric direction ``G`` (full frame)."""
    total = sum(limit_terms(blocks, j, g))
    return blocks.structure.embed(hermitian(total), j)


def limit_adjoint(blocks: RegularizedBlocks, j: int, w) -> np.ndarray:
    """Symmetric ``K`` with ``<limit_map(G), W>_HS = <G, K>_HS`` for all symmetric ``G``.

    ``w`` is a compact ``m_j x m_j`` matrix (``limit_map`` is supported on
    block ``j``).  Each term is transposed through the trace identity; the
    Frechet maps are self-adjoint.
    """
    w = hermitian(w)
    sd = blocks.side(j)
    st = blocks.structure
    k = 3 - j
    f1, f2, c = sd.f1, sd.f2, sd.c
    f1c = f1 @ c
    kjj = frechet_apply(sd.gamma1, sd.dj.vectors, w @ f1c @ f2 @ c.T + c @ f2 @ f1c.T @ w)
    kjk = f1 @ w @ f1c @ f2
    kkk = frechet_apply(sd.gamma2, sd.dk.vectors, f1c.T @ w @ f1c)
    # the G_kj term is the transpose of the G_jk term
    out = st.embed(kjj, j) + st.embed(2.0 * kjk, j, k) + st.embed(kkk, k)
    return hermitian(out)


def symmetric_basis(m: int):
    """Orthonormal basis of symmetric ``m x m`` matrices, yielded as ``(a, b, E_ab)``."""
    for a in range(m):
        for b in range(a, m):
            e = np.zeros((m, m))
            if a == b:
                e[a, a] = 1.0
            else:
                e[a, b] = e[b, a] = np.sqrt(0.5)
            yield a, b, e


@dataclass(frozen=True)
class InfluenceKernel:
    """``K_j`` such that ``<limit_map(G) g, g> = <G, K_j>_HS``."""

    kernel: np.ndarray
    j: int

    def __call__(self, g) -> float:
        return float(np.sum(self.kernel * np.asarray(g)))


def influence_kernel(blocks: RegularizedBlocks, j: int, fstar, method: str = "adjoint") -> InfluenceKernel:
    """Kernel of ``G -> <limit_map(G) fstar, fstar>``.

    ``method="columns"`` evaluates ``limit_map`` on all ``M(M+1)/2`` symmetric
    basis elements; ``method="adjoint"`` uses :func:`limit_adjoint` in
    ``O(M^3)``.  The two agree to round-off.
    """
    fstar = np.asarray(fstar, dtype=float)
    st = blocks.structure
    if method == "adjoint":
        fj = fstar[st.indices(j)]
        return InfluenceKernel(limit_adjoint(blocks, j, np.outer(fj, fj)), j)
    if method == "columns":
        m = st.dim
        kern = np.zeros((m, m))
        for a, b, e in symmetric_basis(m):
            coef = fstar @ limit_map(blocks, j, e) @ fstar
            kern += coef * e
        return InfluenceKernel(kern, j)
    raise ValueError(f"unknown method {method!r}")


def eigenvector_kernels(blocks: RegularizedBlocks, j: int, gstar) -> np.ndarray:
    """Kernels of ``G -> <e_a, A_j limit_map(G) g>`` for every coordinate ``a``.

    Returns an ``(M, M, M)`` array; slices for coordinates outside block ``j``
    are zero.  ``A_j`` is the reduced resolvent of ``R_j`` with coefficient
    ``1 / (rho_1 - rho_k)``.
    """
    st = blocks.structure
    m = st.dim
    gj = np.asarray(gstar, dtype=float)[st.indices(j)]
    a = reduced_resolvent(spectral(r_compact(blocks, j)))
    out = np.zeros((m, m, m))
    offset = st.indices(j).start
    for i in range(st.size(j)):
        out[offset + i] = limit_adjoint(blocks, j, np.outer(a[:, i], gj))
    return out


def _centered_scores(s: FunctionalSample, kernels: np.ndarray) -> np.ndarray:
    """``<Z_i, K>_HS`` for each observation (rows) and each kernel (columns),
    with ``Z_i = x_i (x) x_i - Sigma_hat`` and ``x_i`` centered."""
    _, cov = sample_moments(s)
    xc = s.data - s.data.mean(axis=0)
    ks = kernels.reshape(-1, s.dim, s.dim)
    quad = np.einsum("ia,kab,ib->ik", xc, ks, xc, optimize=True)
    return quad - np.einsum("ab,kab->k", cov, ks)


def empirical_hs_quadform(s: FunctionalSample, k) -> float:
    """Plug-in ``<K, Sigma_HS_hat K>_HS = (1/n) sum_i <Z_i, K>_HS^2``."""
    kern = k.kernel if isinstance(k, InfluenceKernel) else np.asarray(k, dtype=float)
    z = _centered_scores(s, kern[None])[:, 0]
    return float(np.mean(z**2))


def empirical_hs_covariance(s: FunctionalSample, kernels: np.ndarray) -> np.ndarray:
    """``(1/n) sum_i <Z_i, K_a> <Z_i, K_b>`` for a stack of kernels."""
    z = _centered_scores(s, kernels)
    return z.T @ z / s.n


def materialized_hs_covariance(s: FunctionalSample) -> np.ndarray:
    """The ``M^2 x M^2`` plug-in covariance of ``x (x) x``.  Only for tiny ``M``."""
    _, cov = sample_moments(s)
    xc = s.data - s.data.mean(axis=0)
    z = np.einsum("ia,ib->iab", xc, xc) - cov
    z = z.reshape(s.n, -1)
    return z.T @ z / s.n


def gaussian_hs_quadform(cov, k) -> float:
    """``<K, Sigma_HS K>_HS`` for Gaussian data: ``Var(x^T K x) = 2 tr(K S K S)``."""
    kern = k.kernel if isinstance(k, InfluenceKernel) else np.asarray(k, dtype=float)
    ks = kern @ np.asarray(cov, dtype=float)
    return float(2.0 * np.sum(ks * ks.T))


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


def confidence_interval(rho2: float, sigma2: float, n: int, level: float) -> tuple[float, float]:
    if not 0 < level < 1:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    half = normal_quantile(0.5 * (1.0 + level)) * np.sqrt(sigma2 / n)
    return float(rho2 - half), float(rho2 + half)


@dataclass(frozen=True)
class AsymptoticReport:
    rho2: float
    sigma2: float
    ci_rho2: tuple[float, float]
    level: float
    n: int
    j: int
    vector_cov: np.ndarray | None = None

    @property
    def vector_cov_diag(self) -> np.ndarray | None:
        return None if self.vector_cov is None else np.diag(self.vector_cov).copy()


def asymptotic_report(
    s: FunctionalSample, fitted: RfccaFit, level: float = 0.95, j: int = 1, vectors: bool = True
) -> AsymptoticReport:
    """Plug-in asymptotic variance and confidence interval for ``rho2``.

    With ``vectors=True`` the plug-in covariance of the limit of
    ``sqrt(n) (g_hat_j - g_j)`` (top eigenvector of ``R_j``) is included.
    """
    if not 0 < level < 1:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    kern = influence_kernel(fitted.blocks, j, fitted.g(j))
    sigma2 = empirical_hs_quadform(s, kern)
    if sigma2 < 0:
        logger.warning("negative plug-in variance %.3e clamped to 0", sigma2)
        sigma2 = 0.0
    vcov = None
    if vectors:
        vcov = empirical_hs_covariance(s, eigenvector_kernels(fitted.blocks, j, fitted.g(j)))
    return AsymptoticReport(
        rho2=fitted.rho2,
        sigma2=sigma2,
        ci_rho2=confidence_interval(fitted.rho2, sigma2, s.n, level),
        level=level,
        n=s.n,
        j=j,
        vector_cov=vcov,
    )
