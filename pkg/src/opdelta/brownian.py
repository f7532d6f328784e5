"""Two dependent standard Brownian motions on [0, 1] and [1, 2].

Both halves use the Karhunen-Loeve basis ``e_m(t) = sqrt(2) sin((m - 1/2) pi t)``
with variances ``lam_m = ((m - 1/2) pi)^(-2)``.  Mode ``m`` of the second
half is ``sqrt(lam_m) (a_m xi_1m + b_m xi_2m)`` with ``a_m^2 + b_m^2 = 1``, so
the population regularized canonical correlation is known in closed form.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import basis
from .asymptotics import asymptotic_report, gaussian_hs_quadform, influence_kernel
from .fcca import FunctionalSample, fit, fit_cov
from .operators import BlockStructure

logger = logging.getLogger(__name__)

DEFAULT_KL_TERMS = 50
DEFAULT_GRID_POINTS = 201


def kl_eigenvalues(m: int) -> np.ndarray:
    return 1.0 / ((np.arange(1, m + 1) - 0.5) * np.pi) ** 2


@dataclass(frozen=True)
class BrownianModel:
    """Dependence coefficients ``a`` (one per KL mode) and the regularization ``alpha``."""

    a: tuple
    alpha: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("need at least one dependence coefficient")
        if np.any(a**2 > 1.0):
            raise ValueError("dependence coefficients must satisfy a_m^2 <= 1")
        if np.any(np.diff(a**2) > 0):
            raise ValueError("dependence coefficients must satisfy a_1^2 >= a_2^2 >= ...")
        if not self.alpha > 0:
            raise ValueError("regularization parameter must be positive")
        object.__setattr__(self, "a", tuple(float(x) for x in a))

    @classmethod
    def single_mode(cls, a1sq: float, alpha: float, kl_terms: int = DEFAULT_KL_TERMS) -> "BrownianModel":
        """Only the first mode is coupled: ``a = (sqrt(a1sq), 0, 0, ...)``."""
        if not 0 <= a1sq <= 1:
            raise ValueError(f"a1sq must lie in [0, 1], got {a1sq}")
        a = np.zeros(kl_terms)
        a[0] = np.sqrt(a1sq)
        return cls(tuple(a), alpha)

    @property
    def kl_terms(self) -> int:
        return len(self.a)

    @property
    def b(self) -> np.ndarray:
        return np.sqrt(1.0 - np.asarray(self.a) ** 2)

    @property
    def structure(self) -> BlockStructure:
        return BlockStructure(2 * self.kl_terms, self.kl_terms)

    def covariance(self) -> np.ndarray:
        """Population covariance of the coefficient vector ``(U_1., U_2.)``."""
        lam = kl_eigenvalues(self.kl_terms)
        m = self.kl_terms
        cov = np.zeros((2 * m, 2 * m))
        cov[:m, :m] = np.diag(lam)
        cov[m:, m:] = np.diag(lam)
        cov[:m, m:] = cov[m:, :m] = np.diag(lam * np.asarray(self.a))
        return cov


def rspcc_diagonal(model: BrownianModel) -> np.ndarray:
    """Diagonal of the (diagonal) ``R`` matrix: ``a_k^2 lam_k^2 / (alpha + lam_k)^2``."""
    lam = kl_eigenvalues(model.kl_terms)
    return np.asarray(model.a) ** 2 * lam**2 / (model.alpha + lam) ** 2


def true_rho2(model: BrownianModel) -> float:
    lam1 = kl_eigenvalues(1)[0]
    return model.a[0] ** 2 * lam1**2 / (model.alpha + lam1) ** 2


def default_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 2.0, points)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise ValueError("grid must be a 1-d array with at least 3 points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[0] > 0 or grid[-1] < 2 or not np.any(np.isclose(grid, 1.0)):
        raise ValueError("grid must cover [0, 2] and contain t = 1")
    return grid


def draw_coefficients(model: BrownianModel, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """KL coefficients ``U_1`` and ``U_2`` (each ``n x kl_terms``)."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    m = model.kl_terms
    xi1 = rng.standard_normal((n, m))
    xi2 = rng.standard_normal((n, m))
    root = np.sqrt(kl_eigenvalues(m))
    u1 = root * xi1
    u2 = root * (np.asarray(model.a) * xi1 + model.b * xi2)
    return u1, u2


def sample_paths(model: BrownianModel, n: int, grid, seed) -> np.ndarray:
    """``X(t) = X_1(t) + X_2(t)`` on ``grid`` for ``n`` draws (``n x len(grid)``)."""
    grid = _check_grid(grid)
    u1, u2 = draw_coefficients(model, n, seed)
    m = model.kl_terms
    return u1 @ basis.sine_basis(grid, 0.0, 1.0, m).T + u2 @ basis.sine_basis(grid, 1.0, 2.0, m).T


def simulate(model: BrownianModel, n: int, seed, grid=None, basis_size: int | None = None) -> FunctionalSample:
    """Draw ``n`` observations.

    Without ``grid`` the sample holds the exact KL coefficients (working basis
    = the KL functions themselves).  With ``grid`` the paths are sampled on the
    grid and projected back by trapezoid quadrature onto ``basis_size``
    (default ``2 * kl_terms``) split-basis functions.
    """
    if grid is None:
        u1, u2 = draw_coefficients(model, n, seed)
        return FunctionalSample(np.hstack([u1, u2]))
    grid = _check_grid(grid)
    paths = sample_paths(model, n, grid, seed)
    size = 2 * model.kl_terms if basis_size is None else basis_size
    return FunctionalSample(basis.project(grid, paths, 1.0, size))


@dataclass(frozen=True)
class McStudyResult:
    standardized: np.ndarray
    rho2_hat: np.ndarray
    sigma2_hat: np.ndarray
    rho2_true: float
    sigma2_true: float
    n: int
    reps: int
    seed: int
    failures: int
    histogram: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rho2_true": self.rho2_true,
            "sigma2_true": self.sigma2_true,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "failures": self.failures,
            "standardized": self.standardized.tolist(),
            "rho2_hat": self.rho2_hat.tolist(),
            "sigma2_hat": self.sigma2_hat.tolist(),
            "histogram": self.histogram,
            "summary": self.summary,
        }


def population_sigma2(model: BrownianModel) -> float:
    """Asymptotic variance of ``sqrt(n) (rho2_hat - rho2)`` at the true covariance
    (the data are Gaussian, so the fourth-moment operator is explicit)."""
    cov = model.covariance()
    pop = fit_cov(cov, model.structure, model.alpha)
    return gaussian_hs_quadform(cov, influence_kernel(pop.blocks, 1, pop.g1))


def _replicate(model: BrownianModel, n: int, seed_seq, rho2: float):
    sample = simulate(model, n, seed_seq)
    try:
        fitted = fit(sample, model.structure, model.alpha)
        rep = asymptotic_report(sample, fitted, vectors=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        logger.info("replication skipped: %s", exc)
        return None
    return np.sqrt(n) * (fitted.rho2 - rho2), fitted.rho2, rep.sigma2


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("OPDELTA_THREADS", "1")))
    except ValueError:
        return 1


def mc_study(model: BrownianModel, n: int, reps: int, seed: int, bins: int = 20, threads: int | None = None) -> McStudyResult:
    """Repeat simulate -> fit ``reps`` times and summarize ``sqrt(n) (rho2_hat - rho2)``.

    Replication ``r`` draws from the ``r``-th child of ``SeedSequence(seed)``
    (PCG64), so results do not depend on the thread count.
    """
    if reps < 1:
        raise ValueError(f"need reps >= 1, got {reps}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rho2 = true_rho2(model)
    children = np.random.SeedSequence(seed).spawn(reps)
    threads = thread_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda ss: _replicate(model, n, ss, rho2), children))
    else:
        results = [_replicate(model, n, ss, rho2) for ss in children]
    ok = [r for r in results if r is not None]
    std = np.array([r[0] for r in ok])
    rho2_hat = np.array([r[1] for r in ok])
    sigma2_hat = np.array([r[2] for r in ok])
    sigma2_true = population_sigma2(model)

    hist, summary = {}, {}
    if std.size:
        counts, edges = np.histogram(std, bins=bins)
        hist = {"edges": edges.tolist(), "counts": counts.tolist()}
        summary = normality_summary(std, sigma2_hat)
    return McStudyResult(
        standardized=std,
        rho2_hat=rho2_hat,
        sigma2_hat=sigma2_hat,
        rho2_true=rho2,
        sigma2_true=sigma2_true,
        n=n,
        reps=reps,
        seed=seed,
        failures=len(results) - len(ok),
        histogram=hist,
        summary=summary,
    )


def normality_summary(std: np.ndarray, sigma2_hat: np.ndarray) -> dict:
    """Moments and Kolmogorov-Smirnov statistics of the standardized values.

    ``ks_fitted`` compares against a normal with the sample mean and standard
    deviation; ``ks_plugin`` against ``N(0, median sigma2_hat)``.  The 1%
    critical value is the exact one-sample KS quantile.
    """
    reps = std.size
    mean = float(np.mean(std))
    var = float(np.var(std, ddof=1)) if reps > 1 else 0.0
    med = float(np.median(sigma2_hat))
    out = {
        "mean": mean,
        "variance": var,
        "median_sigma2_hat": med,
        "ks_crit_1pct": float(stats.kstwo.ppf(0.99, reps)),
    }
    if reps > 1 and var > 0:
        out["ks_fitted"] = float(stats.kstest(std, "norm", args=(mean, np.sqrt(var))).statistic)
    else:
        out["ks_fitted"] = None
    out["ks_plugin"] = float(stats.kstest(std, "norm", args=(0.0, np.sqrt(med))).statistic) if med > 0 else None
    return out
