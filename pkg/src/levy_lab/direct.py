"""Linear counting estimators built from the empirical increment measure.

The distribution-function estimator weights each increment x by
rho(x) * x^2, counts the weighted mass at or below a threshold, and
rescales by 1/(n*delta). It is an exact step function; evaluation sorts
the increments once and prefix-sums the weights, so a full curve costs
O(n log n + grid size).

Weights of identical increments are grouped before prefix summing. This
makes duplicating a sample a pure power-of-two rescaling, so the estimate
is bit-for-bit unchanged when a sample is concatenated with itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .models import ClipFunction
from .simulate import IncrementSample


@dataclass(frozen=True, eq=False)
class EstimateCurve:
    """An estimated function t -> value on a grid, with provenance tags.

    Attributes
    ----------
    grid : ndarray
        Strictly increasing evaluation points.
    values : ndarray
        Estimates at the grid points; finite.
    method : str
        ``direct`` or ``spectral``.
    target : str
        ``N`` (clipped distribution function) or ``calN`` (tail function).
    n, delta : int, float
        Sample size and observation distance behind the estimate.
    clip : str or None
        Clip-function kind for target ``N``.
    """

    grid: np.ndarray
    values: np.ndarray
    method: str
    target: str
    n: int
    delta: float
    clip: str | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ConfigurationError("grid must be a nonempty 1-d array")
        if np.any(np.diff(grid) <= 0):
            raise ConfigurationError("grid must be strictly increasing")
        if values.shape != grid.shape:
            raise ConfigurationError("grid and values must have equal length")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("curve values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        """Piecewise-linear interpolation of the curve."""
        return np.interp(t, self.grid, self.values)


def _grouped_weights(x: np.ndarray, weights: np.ndarray):
    """Sort x, merge duplicates, and return (unique values, summed weights)."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ws = weights[order]
    uniq, start = np.unique(xs, return_index=True)
    sums = np.add.reduceat(ws, start)
    return uniq, sums


def direct_N(
    sample: IncrementSample, clip: ClipFunction, grid
) -> EstimateCurve:
    """Counting estimator of the clipped jump distribution function.

    The value at t is ``sum over increments x <= t of rho(x) * x^2``
    divided by ``n * delta``. The threshold is inclusive, so the curve is
    a right-continuous nondecreasing step function sampled on ``grid``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigurationError("grid must be nonempty")
    x = sample.increments
    uniq, wsum = _grouped_weights(x, np.asarray(clip.weight(x), dtype=float))
    prefix = np.concatenate([[0.0], np.cumsum(wsum)])
    idx = np.searchsorted(uniq, grid, side="right")
    values = prefix[idx] / (sample.n * sample.delta)
    return EstimateCurve(
        grid, values, "direct", "N", sample.n, sample.delta, clip.kind
    )


def direct_calN(sample: IncrementSample, zeta: float, grid) -> EstimateCurve:
    """Counting estimator of the jump-measure tail function.

    For t < 0 counts increments <= t, for t > 0 counts increments >= t,
    scaled by 1/(n*delta). All grid points must satisfy ``|t| >= zeta``
    with zeta > 0, which keeps a neighbourhood of the origin (where the
    target may blow up) out of the evaluation set.
    """
    if not zeta > 0:
        raise ConfigurationError("zeta must be positive")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigurationError("grid must be nonempty")
    if np.any(np.abs(grid) < zeta):
        raise ValueError("grid points must satisfy |t| >= zeta")
    x = np.sort(sample.increments)
    scale = sample.n * sample.delta
    values = np.empty_like(grid)
    neg = grid < 0
    values[neg] = np.searchsorted(x, grid[neg], side="right") / scale
    values[~neg] = (x.size - np.searchsorted(x, grid[~neg], side="left")) / scale
    return EstimateCurve(grid, values, "direct", "calN", sample.n, sample.delta)


def direct_band_scale(sample: IncrementSample) -> float:
    """Scale estimate for the confidence band around the counting estimator.

    Returns ``sqrt(sum(min(1, x^4)) / (n * delta))``, a consistent
    estimate of the limiting standard deviation of the band construction.
    """
    x = sample.increments
    total = float(np.sum(np.minimum(1.0, x**4)))
    return float(np.sqrt(total / (sample.n * sample.delta)))
