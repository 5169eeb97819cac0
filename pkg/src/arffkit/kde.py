"""Gaussian kernel density estimation for frequency marginals.

The sampler diagnostics project the frequency population onto a rotated
coordinate axis and compare the resulting 1-D marginal against the optimal
density. scipy's estimator refuses degenerate samples (zero variance), which
the early iterations of a zero-initialized run produce, so the estimate is
computed directly: a mean of Gaussian bumps with a Silverman-rule bandwidth
and an explicit fallback scale for constant samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDataError

__all__ = ["KdeEstimate", "silverman_bandwidth", "kde"]

# evaluate the kernel matrix in grid chunks of at most this many cells
_CHUNK = 1 << 18


@dataclass(frozen=True)
class KdeEstimate:
    """A 1-D density estimate on a fixed grid.

    ``axis`` names the projection axis the samples came from (rotated
    coordinate index) and is carried for labeling only; it stays None for
    estimates of plain scalar samples.
    """

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    axis: int | None = None

    def integral(self):
        """Trapezoid mass over the grid; close to 1 when the grid covers."""
        return float(np.trapezoid(self.density, self.grid))


def silverman_bandwidth(samples):
    """Silverman's rule of thumb, 0.9 min(std, IQR/1.34) n^(-1/5).

    Constant samples have zero spread on both scales; the fallback bandwidth
    1e-3 max(1, |c|) keeps the estimate a proper density peaked at c.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2:
        raise DegenerateDataError(f"need at least 2 samples, got {n}")
    spread = float(np.std(samples, ddof=1))
    q75, q25 = np.percentile(samples, [75.0, 25.0])
    iqr = float(q75 - q25)
    if iqr > 0.0:
        spread = min(spread, iqr / 1.34)
    if spread == 0.0:
        return 1e-3 * max(1.0, float(np.abs(samples).max()))
    return 0.9 * spread * n ** (-0.2)


def kde(samples, grid, bandwidth=None, axis=None):
    """Gaussian KDE of 1-D samples evaluated on a grid.

    density(z) = (1/n) sum_i N(z; s_i, h^2). The default bandwidth is
    Silverman's rule. Grid ordering is preserved.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    grid = np.asarray(grid, dtype=float).ravel()
    if samples.size < 2:
        raise DegenerateDataError(f"need at least 2 samples, got {samples.size}")
    if not np.isfinite(samples).all():
        raise DegenerateDataError("samples contain non-finite values")
    h = silverman_bandwidth(samples) if bandwidth is None else float(bandwidth)
    if h <= 0.0:
        raise DegenerateDataError(f"bandwidth must be positive, got {h}")

    norm = 1.0 / (samples.size * h * np.sqrt(2.0 * np.pi))
    density = np.empty_like(grid)
    step = max(1, _CHUNK // samples.size)
    for lo in range(0, grid.size, step):
        block = grid[lo:lo + step, None]
        z = (block - samples[None, :]) / h
        density[lo:lo + step] = norm * np.exp(-0.5 * z * z).sum(axis=1)
    return KdeEstimate(grid=grid, density=density, bandwidth=h, axis=axis)
