"""Confidence bands and tests driven by the running maximum of |B|.

The limit of the normalized sup-error of both estimators is a Brownian
motion time-changed by a variance functional of the jump measure, so its
supremum has the law of ``d * max_{[0,1]} |B|`` for a model-dependent
scale d. Quantiles of ``max |B|`` therefore translate directly into
constant-width confidence bands and a Kolmogorov-Smirnov type test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .direct import EstimateCurve
from .errors import ConfigurationError, EstimationError

_SERIES_TOL = 1e-15
_MAX_TERMS = 200_000


def max_abs_brownian_cdf(a: float) -> float:
    """P(max over [0,1] of |B| <= a) for a standard Brownian motion B.

    Uses the classical alternating series
    ``(4/pi) * sum_k (-1)^k / (2k+1) * exp(-(2k+1)^2 pi^2 / (8 a^2))``,
    summed until the next term is below 1e-15. Nonpositive ``a`` returns
    0.
    """
    if a <= 0.0:
        return 0.0
    coeff = math.pi**2 / (8.0 * a * a)
    total = 0.0
    for k in range(_MAX_TERMS):
        m = 2 * k + 1
        term = math.exp(-(m * m) * coeff) / m
        if k % 2:
            total -= term
        else:
            total += term
        if term < _SERIES_TOL:
            break
    return min(1.0, max(0.0, 4.0 / math.pi * total))


def max_abs_brownian_quantile(level: float) -> float:
    """Value q with ``max_abs_brownian_cdf(q) == level``.

    Solved by bisection on [1e-6, 50] to absolute tolerance 1e-10; the
    distribution function is continuous and strictly increasing there.
    """
    if not 0.0 < level < 1.0:
        raise ConfigurationError("level must lie in (0, 1)")
    lo, hi = 1e-6, 50.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if max_abs_brownian_cdf(mid) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class BandResult:
    """Constant-width confidence band around an estimated curve."""

    curve: EstimateCurve
    half_width: float
    level: float
    q_value: float
    d_value: float

    @property
    def lower(self) -> np.ndarray:
        return self.curve.values - self.half_width

    @property
    def upper(self) -> np.ndarray:
        return self.curve.values + self.half_width

    def contains(self, values) -> bool:
        """Whether the band covers ``values`` at every grid point."""
        values = np.asarray(values, dtype=float)
        return bool(np.all(np.abs(self.curve.values - values) <= self.half_width))


def confidence_band(curve: EstimateCurve, d: float, alpha: float) -> BandResult:
    """Band of asymptotic coverage 1 - alpha around ``curve``.

    The half-width is ``d * q / sqrt(n * delta)`` where q is the upper
    alpha-quantile of ``max |B|`` (that is, the value whose distribution
    function equals 1 - alpha) and d a consistent scale estimate such as
    :func:`levy_lab.direct.direct_band_scale`.
    """
    if not d > 0.0:
        raise EstimationError("band scale d must be positive")
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("alpha must lie in (0, 1)")
    q = max_abs_brownian_quantile(1.0 - alpha)
    half_width = d * q / math.sqrt(curve.n * curve.delta)
    return BandResult(curve, half_width, 1.0 - alpha, q, d)


@dataclass(frozen=True)
class KSTestResult:
    reject: bool
    sup_violation: float


def ks_test(band: BandResult, hypothesized) -> KSTestResult:
    """Kolmogorov-Smirnov type band test of a hypothesized curve.

    ``hypothesized`` may be a callable evaluated on the band's grid or an
    array aligned with it. The hypothesis is rejected exactly when the
    curve leaves the band at some grid point; ``sup_violation`` is the
    largest amount by which the deviation exceeds the half-width (negative
    when the band contains the curve everywhere).
    """
    grid = band.curve.grid
    values = hypothesized(grid) if callable(hypothesized) else hypothesized
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ConfigurationError("hypothesized values must match the band grid")
    deviation = np.abs(band.curve.values - values)
    sup_violation = float(np.max(deviation) - band.half_width)
    return KSTestResult(reject=bool(sup_violation > 0.0), sup_violation=sup_violation)


@dataclass(frozen=True)
class CoverageReport:
    """Aggregate of a Monte Carlo band-coverage experiment."""

    model: str
    method: str
    reps: int
    n: int
    delta: float
    level: float
    hits: int
    failures: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigurationError("reps must be at least 1")
        if self.hits + self.failures > self.reps:
            raise ConfigurationError("hits + failures cannot exceed reps")

    @property
    def misses(self) -> int:
        return self.reps - self.hits - self.failures

    @property
    def coverage(self) -> float:
        return self.hits / self.reps

    @property
    def mc_stderr(self) -> float:
        c = self.coverage
        return math.sqrt(c * (1.0 - c) / self.reps)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.reps

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "method": self.method,
            "reps": self.reps,
            "n": self.n,
            "delta": self.delta,
            "level": self.level,
            "hits": self.hits,
            "misses": self.misses,
            "failures": self.failures,
            "coverage": self.coverage,
            "mc_stderr": self.mc_stderr,
            "failure_rate": self.failure_rate,
        }
