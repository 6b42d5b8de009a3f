"""Experiment orchestration: coverage studies, bias sweeps, figure data.

Replication r of any experiment draws its increments from the Philox
stream ``(base_seed, r)`` and all aggregation happens in replication
order, so results are byte-identical no matter how many worker processes
run them. The pool size is capped by the ``LEVY_LAB_THREADS`` environment
variable.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .direct import EstimateCurve, direct_band_scale, direct_N
from .errors import ConfigurationError, EstimationError
from .inference import CoverageReport, max_abs_brownian_quantile
from .models import ClipFunction, LevyModel, true_N, _x2_density
from .simulate import sample_increments
from .spectral import (
    SpectralConfig,
    _band_scale_parts,
    spectral_density_on_grid,
    spectral_N_from_density,
)

METHODS = ("direct", "spectral")

_FIGURE_RANGES = {"Gamma": (-3.0, 3.0), "NIG": (-2.0, 2.0)}


def resolve_workers(explicit: int | None = None) -> int:
    """Worker-pool size: explicit argument, else LEVY_LAB_THREADS, else CPUs."""
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get("LEVY_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigurationError("LEVY_LAB_THREADS must be an integer") from exc
    return min(os.cpu_count() or 1, 8)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a simulation experiment.

    Serializes losslessly to and from a single JSON document; command line
    flags override individual fields.
    """

    model: LevyModel
    method: str = "spectral"
    n: int = 2000
    delta: float = 0.01
    reps: int = 500
    level: float = 0.9
    base_seed: int = 0
    clip: str = "min_one_inv_x2"
    grid_points: int = 512
    t_min: float | None = None
    t_max: float | None = None
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    deltas: tuple[float, ...] = ()
    time_horizon: float | None = None
    ref_t: float = 3.0
    truth_tol: float = 1e-9

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}")
        if self.n < 1 or self.reps < 1:
            raise ConfigurationError("n and reps must be at least 1")
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive")
        if not 0.0 < self.level < 1.0:
            raise ConfigurationError("level must lie in (0, 1)")
        if self.base_seed < 0:
            raise ConfigurationError("base_seed must be nonnegative")
        if self.grid_points < 2:
            raise ConfigurationError("grid_points must be at least 2")
        if any(d <= 0 for d in self.deltas):
            raise ConfigurationError("all deltas must be positive")
        if self.time_horizon is not None and not self.time_horizon > 0:
            raise ConfigurationError("time_horizon must be positive")
        if (self.t_min is None) != (self.t_max is None):
            raise ConfigurationError("t_min and t_max must be given together")
        if self.t_min is not None and not self.t_min < self.t_max:
            raise ConfigurationError("t_min must be below t_max")

    def to_dict(self) -> dict:
        out = {
            "model": self.model.to_dict(),
            "method": self.method,
            "n": self.n,
            "delta": self.delta,
            "reps": self.reps,
            "level": self.level,
            "base_seed": self.base_seed,
            "clip": self.clip,
            "grid_points": self.grid_points,
            "t_min": self.t_min,
            "t_max": self.t_max,
            "spectral": {
                "h": self.spectral.h,
                "c_flat": self.spectral.c_flat,
                "u_points": self.spectral.u_points,
                "x_range": self.spectral.x_range,
                "x_points": self.spectral.x_points,
                "cf_floor": self.spectral.cf_floor,
                "sigma_mode": self.spectral.sigma_mode,
                "sigma2": self.spectral.sigma2,
                "c0": self.spectral.c0,
                "sigma_max": self.spectral.sigma_max,
            },
            "deltas": list(self.deltas),
            "time_horizon": self.time_horizon,
            "ref_t": self.ref_t,
            "truth_tol": self.truth_tol,
        }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        model = LevyModel.from_dict(data.pop("model"))
        spectral = SpectralConfig(**data.pop("spectral", {}))
        deltas = tuple(data.pop("deltas", ()))
        return cls(model=model, spectral=spectral, deltas=deltas, **data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)


def default_t_grid(
    increments: np.ndarray,
    points: int = 512,
    anchor: tuple[float, float] = (-3.0, 3.0),
    clamp: tuple[float, float] | None = None,
) -> np.ndarray:
    """Evaluation grid spanning the central 99.9% of the sample and ``anchor``."""
    qlo, qhi = np.quantile(increments, [0.0005, 0.9995])
    lo = min(anchor[0], float(qlo))
    hi = max(anchor[1], float(qhi))
    if clamp is not None:
        lo = max(lo, clamp[0])
        hi = min(hi, clamp[1])
    if not lo < hi:  # pragma: no cover - guarded by clamp choices
        lo, hi = clamp
    return np.linspace(lo, hi, points)


def truth_table(
    model: LevyModel,
    clip: ClipFunction,
    lo: float,
    hi: float,
    panels: int = 8192,
    tol: float = 1e-9,
) -> tuple[np.ndarray, np.ndarray]:
    """Dense tabulation of the true clipped distribution function.

    The mass below ``lo`` comes from adaptive quadrature; each panel of
    the dense grid is then integrated with 16-node Gauss-Legendre
    quadrature, vectorized over panels, and accumulated. Linear
    interpolation of the table reproduces pointwise adaptive quadrature
    to well below any band width used here.
    """
    edges = np.union1d(
        np.linspace(lo, hi, panels + 1),
        [b for b in (-1.0, 0.0, 1.0) if lo < b < hi],
    )
    base = true_N(model, clip, edges[0], tol)
    nodes, weights = np.polynomial.legendre.leggauss(16)
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    halfw = 0.5 * (b - a)
    xs = mid[:, None] + halfw[:, None] * nodes[None, :]
    flat = xs.ravel()
    vals = (clip.rho(flat) * _x2_density(model, flat)).reshape(xs.shape)
    segments = (vals @ weights) * halfw
    cumulative = base + np.concatenate([[0.0], np.cumsum(segments)])
    return edges, cumulative


# Per-worker experiment context, installed by the pool initializer.
_CTX: dict = {}


def _set_ctx(ctx: dict):
    global _CTX
    _CTX = dict(ctx)
    _CTX["model"] = LevyModel.from_dict(ctx["model"])
    _CTX["clip"] = ClipFunction(ctx["clip"])
    _CTX["spectral"] = SpectralConfig(**ctx["spectral"])


def _run_replications(func, reps: int, ctx: dict, workers: int) -> list:
    if workers <= 1:
        _set_ctx(ctx)
        return [func(r) for r in range(reps)]
    chunk = max(1, reps // (workers * 4))
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_set_ctx, initargs=(ctx,)
    ) as pool:
        return list(pool.map(func, range(reps), chunksize=chunk))


def _estimate_with_scale(sample, grid) -> tuple[EstimateCurve, float]:
    """Curve and band-scale estimate for the configured method."""
    if _CTX["method"] == "direct":
        curve = direct_N(sample, _CTX["clip"], grid)
        return curve, direct_band_scale(sample)
    density = spectral_density_on_grid(sample, _CTX["spectral"])
    curve = spectral_N_from_density(density, _CTX["clip"], grid)
    total, _ = _band_scale_parts(density)
    if total < 0.0:  # pragma: no cover - clipped integrand is nonnegative
        raise EstimationError("band scale integral is negative")
    return curve, math.sqrt(total)


def _rep_grid(sample) -> np.ndarray:
    if _CTX["t_min"] is not None:
        return np.linspace(_CTX["t_min"], _CTX["t_max"], _CTX["grid_points"])
    a = _CTX["spectral"].x_range
    return default_t_grid(
        sample.increments, _CTX["grid_points"], clamp=(-a, a)
    )


_HIT, _MISS, _FAIL = 1, 0, 2


def _coverage_rep(r: int) -> int:
    sample = sample_increments(
        _CTX["model"], _CTX["n"], _CTX["delta"], _CTX["base_seed"], stream=r
    )
    grid = _rep_grid(sample)
    truth = np.interp(grid, _CTX["truth_x"], _CTX["truth_y"])
    try:
        curve, d = _estimate_with_scale(sample, grid)
    except EstimationError:
        return _FAIL
    half_width = d * _CTX["q_value"] / math.sqrt(sample.n * sample.delta)
    hit = np.all(np.abs(curve.values - truth) <= half_width)
    return _HIT if hit else _MISS


def run_coverage(config: ExperimentConfig, workers: int | None = None) -> CoverageReport:
    """Monte Carlo estimate of the band's uniform coverage probability.

    Each replication samples increments, estimates the clipped
    distribution function, builds the level-``config.level`` band, and
    checks whether the true curve stays inside it on the whole grid.
    Estimation failures are tallied separately from misses.
    """
    workers = resolve_workers(workers)
    clip = ClipFunction(config.clip)
    a = config.spectral.x_range
    tx, ty = truth_table(config.model, clip, -a - 1.0, a + 1.0, tol=config.truth_tol)
    ctx = {
        "model": config.model.to_dict(),
        "clip": config.clip,
        "spectral": config.spectral.__dict__,
        "method": config.method,
        "n": config.n,
        "delta": config.delta,
        "base_seed": config.base_seed,
        "grid_points": config.grid_points,
        "t_min": config.t_min,
        "t_max": config.t_max,
        "truth_x": tx,
        "truth_y": ty,
        "q_value": max_abs_brownian_quantile(config.level),
    }
    outcomes = _run_replications(_coverage_rep, config.reps, ctx, workers)
    hits = sum(1 for o in outcomes if o == _HIT)
    failures = sum(1 for o in outcomes if o == _FAIL)
    return CoverageReport(
        model=config.model.tag(),
        method=config.method,
        reps=config.reps,
        n=config.n,
        delta=config.delta,
        level=config.level,
        hits=hits,
        failures=failures,
    )


def _bias_rep(r: int) -> tuple[float, float, np.ndarray]:
    sample = sample_increments(
        _CTX["model"], _CTX["n"], _CTX["delta"], _CTX["base_seed"], stream=r
    )
    grid = np.asarray(_CTX["grid"])
    truth = np.interp(grid, _CTX["truth_x"], _CTX["truth_y"])
    curve, _ = _estimate_with_scale(sample, grid)
    sup_abs = float(np.max(np.abs(curve.values - truth)))
    ref_t = _CTX["ref_t"]
    signed = float(
        np.interp(ref_t, grid, curve.values)
        - np.interp(ref_t, _CTX["truth_x"], _CTX["truth_y"])
    )
    return sup_abs, signed, curve.values


@dataclass(frozen=True)
class BiasRow:
    """Error statistics of one observation distance in a sweep.

    ``mean_sup_abs_error`` averages the per-replication sup-distance to
    the truth (bias plus noise). ``sup_abs_bias`` is the sup-distance of
    the replication-averaged curve to the truth, the Monte Carlo estimate
    of the estimator's deterministic bias alone.
    """

    delta: float
    n: int
    reps: int
    mean_sup_abs_error: float
    sup_abs_bias: float
    mean_signed_error_at_ref: float
    ref_t: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def run_bias_sweep(
    config: ExperimentConfig, workers: int | None = None
) -> list[BiasRow]:
    """Mean sup-error of the estimator across observation distances.

    Runs ``config.reps`` replications for each entry of ``config.deltas``.
    When ``config.time_horizon`` is set, the sample size for each delta is
    ``round(time_horizon / delta)`` so the observation horizon stays
    fixed; otherwise ``config.n`` is reused unchanged.
    """
    if len(config.deltas) < 2:
        raise ConfigurationError("bias sweep needs at least two deltas")
    workers = resolve_workers(workers)
    clip = ClipFunction(config.clip)
    lo, hi = _figure_range(config)
    grid = np.linspace(lo, hi, config.grid_points)
    margin = max(abs(lo), abs(hi), config.ref_t) + 1.0
    tx, ty = truth_table(config.model, clip, -margin, margin, tol=config.truth_tol)
    rows = []
    for delta in config.deltas:
        n = config.n
        if config.time_horizon is not None:
            n = max(1, round(config.time_horizon / delta))
        ctx = {
            "model": config.model.to_dict(),
            "clip": config.clip,
            "spectral": config.spectral.__dict__,
            "method": config.method,
            "n": n,
            "delta": delta,
            "base_seed": config.base_seed,
            "grid": grid,
            "truth_x": tx,
            "truth_y": ty,
            "ref_t": config.ref_t,
        }
        results = _run_replications(_bias_rep, config.reps, ctx, workers)
        sup = sum(s for s, _, _ in results) / config.reps
        signed = sum(e for _, e, _ in results) / config.reps
        mean_curve = sum(c for _, _, c in results) / config.reps
        truth = np.interp(grid, tx, ty)
        rows.append(
            BiasRow(
                delta=float(delta),
                n=n,
                reps=config.reps,
                mean_sup_abs_error=sup,
                sup_abs_bias=float(np.max(np.abs(mean_curve - truth))),
                mean_signed_error_at_ref=signed,
                ref_t=config.ref_t,
            )
        )
    return rows


def _figure_range(config: ExperimentConfig) -> tuple[float, float]:
    if config.t_min is not None:
        return config.t_min, config.t_max
    return _FIGURE_RANGES.get(config.model.kind, (-3.0, 3.0))


@dataclass(frozen=True, eq=False)
class FigureData:
    """Curves behind one panel of the estimator overlay figure."""

    grid: np.ndarray
    truth: np.ndarray
    curves: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    method: str
    model: str
    level: float


def run_figure(config: ExperimentConfig) -> FigureData:
    """Estimator fan chart data: many replications plus one band.

    Produces ``config.reps`` estimated curves on a fixed grid, the true
    curve, and the confidence band of the first replication.
    """
    clip = ClipFunction(config.clip)
    lo, hi = _figure_range(config)
    grid = np.linspace(lo, hi, config.grid_points)
    margin = max(abs(lo), abs(hi)) + 1.0
    tx, ty = truth_table(config.model, clip, -margin, margin, tol=config.truth_tol)
    truth = np.interp(grid, tx, ty)
    ctx = {
        "model": config.model.to_dict(),
        "clip": config.clip,
        "spectral": config.spectral.__dict__,
        "method": config.method,
        "n": config.n,
        "delta": config.delta,
        "base_seed": config.base_seed,
    }
    _set_ctx(ctx)
    curves = np.empty((config.reps, grid.size))
    half_width = None
    for r in range(config.reps):
        sample = sample_increments(
            config.model, config.n, config.delta, config.base_seed, stream=r
        )
        curve, d = _estimate_with_scale(sample, grid)
        curves[r] = curve.values
        if r == 0:
            q = max_abs_brownian_quantile(config.level)
            half_width = d * q / math.sqrt(config.n * config.delta)
    return FigureData(
        grid=grid,
        truth=truth,
        curves=curves,
        lower=curves[0] - half_width,
        upper=curves[0] + half_width,
        method=config.method,
        model=config.model.tag(),
        level=config.level,
    )


def format_float(x: float) -> str:
    """Decimal form with 17 significant digits (lossless round trip)."""
    return f"{x:.17g}"


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".meta.json")
