"""Spectral functional calculus, its Frechet derivative, and eigen-perturbation.

The derivative of ``T -> phi(T)`` in a direction ``P`` that need not commute
with ``T`` is, in the eigenbasis ``U`` of ``T``,

    phi'_T P = U (Gamma * (U^T P U)) U^T

where ``Gamma[a, b]`` is ``phi'(lam_a)`` when eigenpairs ``a`` and ``b`` share
an eigenvalue group and the divided difference
``(phi(lam_b) - phi(lam_a)) / (lam_b - lam_a)`` otherwise.  This is the
projection-sum formula written with rank-one projections; ``Gamma`` is
symmetric, so the map is self-adjoint in the Hilbert-Schmidt inner product.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .operators import SpectralDecomposition, fix_sign, hermitian, spectral

logger = logging.getLogger(__name__)

DD_REL_TOL = 1e-7


class DomainError(ValueError):
    """An eigenvalue falls outside the domain of the applied function."""


class DegenerateEigenspaceError(np.linalg.LinAlgError):
    """The leading eigenvalue is not simple."""


@dataclass(frozen=True)
class AnalyticFn:
    """A scalar function given by its value and derivative.

    ``lower`` is the smallest eigenvalue the function may be evaluated at.
    """

    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    lower: float = -np.inf
    name: str = "phi"

    def check_domain(self, eigenvalues: np.ndarray) -> None:
        bad = eigenvalues[eigenvalues < self.lower]
        if bad.size:
            raise DomainError(
                f"{self.name}: eigenvalue {bad.min():.6g} is below the domain bound {self.lower:.6g}"
            )


def inverse_power(alpha: float, p: int) -> AnalyticFn:
    """``z -> (alpha + z)^(-p/2)`` restricted to ``z >= -alpha/3``."""
    if alpha <= 0:
        raise ValueError("regularization parameter must be positive")
    e = -p / 2.0
    return AnalyticFn(
        value=lambda z: (alpha + z) ** e,
        derivative=lambda z: e * (alpha + z) ** (e - 1.0),
        lower=-alpha / 3.0,
        name=f"phi_{p}(alpha={alpha:g})",
    )


identity_fn = AnalyticFn(value=lambda z: np.asarray(z, dtype=float), derivative=lambda z: np.ones_like(z), name="id")


def _decompose(t, decomp: SpectralDecomposition | None) -> SpectralDecomposition:
    return spectral(t) if decomp is None else decomp


def apply_fn(phi: AnalyticFn, t, decomp: SpectralDecomposition | None = None) -> np.ndarray:
    """``phi(T) = sum_j phi(lam_j) P_j``."""
    d = _decompose(t, decomp)
    lam = d.grouped_values
    phi.check_domain(lam)
    return hermitian((d.vectors * phi.value(lam)) @ d.vectors.T)


def divided_differences(phi: AnalyticFn, decomp: SpectralDecomposition) -> tuple[np.ndarray, int]:
    """The ``Gamma`` coefficient matrix over eigenpairs, and how many distinct
    group pairs fell back to the midpoint derivative."""
    lam = decomp.grouped_values
    phi.check_domain(lam)
    fv = phi.value(lam)
    diff = lam[None, :] - lam[:, None]
    same = decomp.labels[None, :] == decomp.labels[:, None]
    delta = DD_REL_TOL * max(1.0, float(np.max(np.abs(lam))) if lam.size else 1.0)
    close = (~same) & (np.abs(diff) < delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = (fv[None, :] - fv[:, None]) / diff
    mid = 0.5 * (lam[None, :] + lam[:, None])
    gamma = np.where(same, phi.derivative(mid), gamma)
    n_close = int(np.count_nonzero(close))
    if n_close:
        gamma = np.where(close, phi.derivative(mid), gamma)
        logger.debug("%s: %d near-coalescing eigenpair couplings stabilized", phi.name, n_close // 2)
    return gamma, n_close // 2


def frechet_apply(gamma: np.ndarray, vectors: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``U (Gamma * (U^T P U)) U^T`` without symmetrizing ``P``.

    Valid for any square ``P`` (used by adjoint computations); for symmetric
    ``P`` it is the Frechet derivative.
    """
    return vectors @ (gamma * (vectors.T @ p @ vectors)) @ vectors.T


def frechet_derivative(phi: AnalyticFn, t, p, decomp: SpectralDecomposition | None = None) -> np.ndarray:
    """Frechet derivative of ``phi`` at ``T`` applied to the direction ``P``."""
    d = _decompose(t, decomp)
    p = hermitian(p)
    if p.shape != (d.dim, d.dim):
        raise ValueError(f"dimension mismatch: {p.shape} vs operator of dim {d.dim}")
    gamma, _ = divided_differences(phi, d)
    return hermitian(frechet_apply(gamma, d.vectors, p))


def frechet_derivative_projections(phi: AnalyticFn, t, p, decomp: SpectralDecomposition | None = None) -> np.ndarray:
    """Literal double sum over eigenprojections; quadratic in the number of
    groups, kept as a cross-check for :func:`frechet_derivative`."""
    d = _decompose(t, decomp)
    p = hermitian(p)
    lam = d.group_values
    phi.check_domain(lam)
    fv, dv = phi.value(lam), phi.derivative(lam)
    projs = d.projections
    out = np.zeros_like(p)
    for j, pj in enumerate(projs):
        for k, pk in enumerate(projs):
            if j == k:
                coef = dv[j]
            else:
                coef = (fv[k] - fv[j]) / (lam[k] - lam[j])
            out += coef * (pj @ p @ pk)
    return hermitian(out)


def reduced_resolvent(decomp: SpectralDecomposition) -> np.ndarray:
    """``A = sum_{j>=2} (lam_1 - lam_j)^(-1) P_j`` for a simple top eigenvalue."""
    if decomp.multiplicities[0] != 1:
        raise DegenerateEigenspaceError("degenerate leading eigenspace")
    lam = decomp.grouped_values
    rest = decomp.vectors[:, 1:]
    return (rest / (lam[0] - lam[1:])) @ rest.T


@dataclass(frozen=True)
class PerturbationExpansion:
    eigenvalue: float
    eigenvector: np.ndarray
    eigenvalue_shift: float
    eigenvector_shift: np.ndarray
    remainder_bound_order: int = 2

    @property
    def predicted_eigenvalue(self) -> float:
        return self.eigenvalue + self.eigenvalue_shift

    @property
    def predicted_eigenvector(self) -> np.ndarray:
        return self.eigenvector + self.eigenvector_shift


def perturb_eigen(t, p, decomp: SpectralDecomposition | None = None) -> PerturbationExpansion:
    """First-order change of the leading eigenpair of ``T`` under ``T + P``.

    Uses the classical reduced-resolvent coefficient ``1 / (lam_1 - lam_j)``.
    """
    d = _decompose(t, decomp)
    if d.multiplicities[0] != 1:
        raise DegenerateEigenspaceError("degenerate leading eigenspace")
    p = hermitian(p)
    p1 = d.vectors[:, 0]
    pp1 = p @ p1
    return PerturbationExpansion(
        eigenvalue=float(d.values[0]),
        eigenvector=p1,
        eigenvalue_shift=float(pp1 @ p1),
        eigenvector_shift=reduced_resolvent(d) @ pp1,
    )


def leading_eigenpair(t) -> tuple[float, np.ndarray]:
    """Top eigenvalue and unit eigenvector under the sign convention."""
    w, v = np.linalg.eigh(hermitian(t))
    return float(w[-1]), fix_sign(v[:, -1])
