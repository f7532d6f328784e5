"""Split-adapted sine basis and quadrature projection of sampled curves."""
from __future__ import annotations

import numpy as np


def sine_basis(t, lo: float, hi: float, m: int) -> np.ndarray:
    """``sqrt(2/L) sin((k - 1/2) pi (t - lo) / L)`` for ``k = 1..m`` on ``[lo, hi]``.

    Orthonormal in ``L2(lo, hi)``; zero outside the interval.  Returns a
    ``len(t) x m`` array.
    """
    t = np.asarray(t, dtype=float)
    length = hi - lo
    freqs = (np.arange(1, m + 1) - 0.5) * np.pi / length
    vals = np.sqrt(2.0 / length) * np.sin(np.outer(t - lo, freqs))
    inside = (t >= lo) & (t <= hi)
    return vals * inside[:, None]


def trapezoid_weights(t: np.ndarray) -> np.ndarray:
    h = np.diff(t)
    w = np.zeros(len(t))
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def _side(grid, rows, lo, hi, split_at_end):
    inside = (grid >= lo) & (grid <= hi)
    t, y = grid[inside], rows[:, inside]
    edge = hi if split_at_end else lo
    if not np.isclose(t[-1] if split_at_end else t[0], edge, rtol=0, atol=1e-12 * max(1.0, abs(edge))):
        # extrapolate from the same side: curves may jump at the split
        i, j = (-2, -1) if split_at_end else (0, 1)
        w = (edge - t[i]) / (t[j] - t[i])
        ye = ((1 - w) * y[:, i] + w * y[:, j])[:, None]
        t = np.append(t, edge) if split_at_end else np.insert(t, 0, edge)
        y = np.hstack([y, ye]) if split_at_end else np.hstack([ye, y])
    return t, y


def split_sizes(basis_size: int) -> tuple[int, int]:
    m1 = basis_size // 2
    return m1, basis_size - m1


def project(grid, rows, split: float, basis_size: int) -> np.ndarray:
    """Coefficients of each row (curve sampled on ``grid``) in the split basis.

    The first ``basis_size // 2`` functions live on ``[grid[0], split]``, the
    rest on ``[split, grid[-1]]``; inner products use the trapezoid rule.
    """
    grid = np.asarray(grid, dtype=float)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    m1, m2 = split_sizes(basis_size)
    coeffs = []
    for lo, hi, m, at_end in ((grid[0], split, m1, True), (split, grid[-1], m2, False)):
        t, y = _side(grid, rows, lo, hi, at_end)
        phi = sine_basis(t, lo, hi, m)
        coeffs.append(y @ (trapezoid_weights(t)[:, None] * phi))
    return np.hstack(coeffs)


def synthesize(grid, coeffs, split: float, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Evaluate curves with the given split-basis coefficients on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    lo = grid[0] if lo is None else lo
    hi = grid[-1] if hi is None else hi
    m1, m2 = split_sizes(coeffs.shape[1])
    left = sine_basis(grid, lo, split, m1)
    right = sine_basis(grid, split, hi, m2)
    return coeffs[:, :m1] @ left.T + coeffs[:, m1:] @ right.T
