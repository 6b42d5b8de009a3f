"""Command line interface.

Subcommands::

    simulate    draw increments and write them as CSV (k,x)
    truth       tabulate the true N or tail function of a model
    estimate    run the direct or spectral estimator on increment data
    band        estimate plus a constant-width confidence band
    test        KS-type band test of a hypothesized curve
    coverage    Monte Carlo coverage experiment (JSON report)
    figure      fan chart data (CSV) and an optional rendered image
    bias-sweep  mean sup-error across observation distances (CSV)
    quantile    quantiles of the running maximum of |B|

Exit codes: 0 success, 2 configuration error, 3 estimation failure.
All numeric output is serialized with 17 significant digits and no
timestamps, so identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .direct import direct_band_scale, direct_calN, direct_N
from .errors import ConfigurationError, EstimationError
from .harness import (
    ExperimentConfig,
    default_t_grid,
    format_float,
    resolve_workers,
    run_bias_sweep,
    run_coverage,
    run_figure,
    sidecar_path,
    write_csv,
    write_json,
)
from .inference import confidence_band, ks_test, max_abs_brownian_quantile
from .models import ClipFunction, parse_model, true_calN, true_N_curve
from .simulate import IncrementSample, sample_increments
from .spectral import (
    SpectralConfig,
    _band_scale_parts,
    spectral_calN_from_density,
    spectral_density_on_grid,
    spectral_N_from_density,
)


def _add_model_arg(p, required=True):
    p.add_argument(
        "--model",
        required=required,
        help="model spec, e.g. 'Gamma(c=30,lam=1)' or a JSON object",
    )


def _parse_model_arg(text):
    text = text.strip()
    if text.startswith("{"):
        return parse_model(json.loads(text))
    return parse_model(text)


def _add_spectral_args(p, concrete: bool = True):
    # With concrete=False every default is None, meaning "keep the value
    # from the config file"; flags then override field by field.
    p.add_argument("--h", type=float, default=None, help="bandwidth (default sqrt(delta))")
    p.add_argument("--c-flat", type=float, default=0.5 if concrete else None)
    p.add_argument("--x-range", type=float, default=8.0 if concrete else None)
    p.add_argument("--x-points", type=int, default=8192 if concrete else None)
    p.add_argument("--u-points", type=int, default=4096 if concrete else None)
    p.add_argument(
        "--sigma",
        default="zero" if concrete else None,
        help="pilot variance mode: zero, estimate, or known:<value>",
    )
    p.add_argument("--c0", type=float, default=1.0 / 6.0 if concrete else None)
    p.add_argument("--sigma-max", type=float, default=1.0 if concrete else None)
    p.add_argument("--cf-floor", type=float, default=1e-12 if concrete else None)


def _spectral_config(args) -> SpectralConfig:
    mode, sigma2 = args.sigma, 0.0
    if mode.startswith("known:"):
        mode, sigma2 = "known", float(args.sigma.split(":", 1)[1])
    elif mode == "known":
        raise ConfigurationError("use known:<value> to pass a known variance")
    return SpectralConfig(
        h=args.h,
        c_flat=args.c_flat,
        u_points=args.u_points,
        x_range=args.x_range,
        x_points=args.x_points,
        cf_floor=args.cf_floor,
        sigma_mode=mode,
        sigma2=sigma2,
        c0=args.c0,
        sigma_max=args.sigma_max,
    )


def _add_grid_args(p):
    p.add_argument("--t-min", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--points", type=int, default=512)


def _read_increments(path: str, delta: float) -> IncrementSample:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigurationError(f"cannot read increments file {path}: {exc}") from exc
    if data.shape[1] < 2:
        raise ConfigurationError("increments CSV must have columns k,x")
    return IncrementSample(data[:, 1], delta, model_tag=Path(path).name)


def _estimate_grid(args, sample, spectral_needed: bool) -> np.ndarray:
    if args.t_min is not None and args.t_max is not None:
        return np.linspace(args.t_min, args.t_max, args.points)
    clamp = (-args.x_range, args.x_range) if spectral_needed else None
    return default_t_grid(sample.increments, args.points, clamp=clamp)


def _caln_grid(grid: np.ndarray, zeta: float) -> np.ndarray:
    kept = grid[np.abs(grid) >= zeta]
    if kept.size == 0:
        raise ConfigurationError("no grid points outside (-zeta, zeta)")
    return kept


def _estimate_curve_and_diag(args, sample):
    """Shared estimation path for the estimate/band/test subcommands."""
    clip = ClipFunction(args.clip)
    diagnostics = {}
    if args.method == "spectral":
        cfg = _spectral_config(args)
        density = spectral_density_on_grid(sample, cfg)
        grid = _estimate_grid(args, sample, spectral_needed=True)
        if args.target == "calN":
            grid = _caln_grid(grid, args.zeta)
            curve = spectral_calN_from_density(density, args.zeta, grid)
        else:
            curve = spectral_N_from_density(density, clip, grid)
        total, clip_fraction = _band_scale_parts(density)
        diagnostics = {
            "guard_count": density.guard_count,
            "imag_residue": density.imag_residue,
            "sigma2": density.sigma2,
            "h": density.h,
            "band_scale_clip_fraction": clip_fraction,
        }
        d = float(np.sqrt(total)) if total > 0 else 0.0
    else:
        grid = _estimate_grid(args, sample, spectral_needed=False)
        if args.target == "calN":
            grid = _caln_grid(grid, args.zeta)
            curve = direct_calN(sample, args.zeta, grid)
        else:
            curve = direct_N(sample, clip, grid)
        d = direct_band_scale(sample)
    return curve, d, diagnostics


def _cmd_simulate(args) -> int:
    model = _parse_model_arg(args.model)
    sample = sample_increments(model, args.n, args.delta, args.seed, args.stream)
    rows = [(k + 1, float(x)) for k, x in enumerate(sample.increments)]
    write_csv(args.out, ["k", "x"], rows)
    write_json(
        sidecar_path(args.out),
        {
            "model": model.to_dict(),
            "n": args.n,
            "delta": args.delta,
            "seed": args.seed,
            "stream": args.stream,
        },
    )
    return 0


def _cmd_truth(args) -> int:
    model = _parse_model_arg(args.model)
    if args.t_min is None or args.t_max is None:
        raise ConfigurationError("truth requires --t-min and --t-max")
    grid = np.linspace(args.t_min, args.t_max, args.points)
    if args.target == "calN":
        grid = _caln_grid(grid, args.zeta)
        values = np.array([true_calN(model, t, args.tol) for t in grid])
        header = ["t", "calN_true"]
    else:
        clip = ClipFunction(args.clip)
        values = true_N_curve(model, clip, grid, args.tol)
        header = ["t", "N_true"]
    write_csv(args.out, header, zip(grid.tolist(), values.tolist()))
    return 0


def _cmd_estimate(args) -> int:
    sample = _read_increments(args.infile, args.delta)
    curve, _, diagnostics = _estimate_curve_and_diag(args, sample)
    write_csv(args.out, ["t", "value"], zip(curve.grid.tolist(), curve.values.tolist()))
    meta = {"method": args.method, "target": args.target, "delta": args.delta}
    meta.update(diagnostics)
    write_json(sidecar_path(args.out), meta)
    return 0


def _cmd_band(args) -> int:
    sample = _read_increments(args.infile, args.delta)
    args.target = "N"
    curve, d, diagnostics = _estimate_curve_and_diag(args, sample)
    band = confidence_band(curve, d, 1.0 - args.level)
    rows = zip(
        curve.grid.tolist(),
        band.lower.tolist(),
        curve.values.tolist(),
        band.upper.tolist(),
    )
    write_csv(args.out, ["t", "lower", "estimate", "upper"], rows)
    meta = {
        "method": args.method,
        "level": args.level,
        "q_value": band.q_value,
        "d_value": band.d_value,
        "half_width": band.half_width,
        "delta": args.delta,
    }
    meta.update(diagnostics)
    write_json(sidecar_path(args.out), meta)
    return 0


def _cmd_test(args) -> int:
    sample = _read_increments(args.infile, args.delta)
    args.target = "N"
    curve, d, _ = _estimate_curve_and_diag(args, sample)
    band = confidence_band(curve, d, 1.0 - args.level)
    if args.hypothesis_model:
        model = _parse_model_arg(args.hypothesis_model)
        clip = ClipFunction(args.clip)
        hypothesized = true_N_curve(model, clip, curve.grid, args.tol)
    elif args.hypothesis_csv:
        table = np.loadtxt(args.hypothesis_csv, delimiter=",", skiprows=1, ndmin=2)
        hypothesized = np.interp(curve.grid, table[:, 0], table[:, 1])
    else:
        raise ConfigurationError("test needs --hypothesis-model or --hypothesis-csv")
    result = ks_test(band, hypothesized)
    payload = {
        "reject": result.reject,
        "sup_violation": result.sup_violation,
        "half_width": band.half_width,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _load_config(args) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_json(Path(args.config).read_text())
    else:
        if not args.model:
            raise ConfigurationError("provide --config or --model")
        config = ExperimentConfig(model=_parse_model_arg(args.model))
    overrides = {}
    if args.model and args.config:
        overrides["model"] = _parse_model_arg(args.model)
    for name in ("method", "n", "delta", "reps", "level", "base_seed"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "t_min", None) is not None:
        overrides["t_min"] = args.t_min
        overrides["t_max"] = args.t_max
    if getattr(args, "deltas", None):
        overrides["deltas"] = tuple(float(v) for v in args.deltas.split(","))
    if getattr(args, "time_horizon", None) is not None:
        overrides["time_horizon"] = args.time_horizon
    spectral_overrides = {}
    for flag, fld in (
        ("h", "h"),
        ("c_flat", "c_flat"),
        ("u_points", "u_points"),
        ("x_range", "x_range"),
        ("x_points", "x_points"),
        ("cf_floor", "cf_floor"),
        ("c0", "c0"),
        ("sigma_max", "sigma_max"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            spectral_overrides[fld] = value
    sigma = getattr(args, "sigma", None)
    if sigma is not None:
        mode, sigma2 = sigma, 0.0
        if mode.startswith("known:"):
            mode, sigma2 = "known", float(sigma.split(":", 1)[1])
        elif mode == "known":
            raise ConfigurationError("use known:<value> to pass a known variance")
        spectral_overrides["sigma_mode"] = mode
        spectral_overrides["sigma2"] = sigma2
    if spectral_overrides:
        overrides["spectral"] = config.spectral.with_overrides(**spectral_overrides)
    return config.with_overrides(**overrides) if overrides else config


def _cmd_coverage(args) -> int:
    config = _load_config(args)
    report = run_coverage(config, workers=resolve_workers(args.workers))
    payload = {"config": config.to_dict(), "report": report.to_dict()}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_figure(args) -> int:
    if args.reps is None and not args.config:
        args.reps = 50
    config = _load_config(args)
    data = run_figure(config)
    header = ["t", "truth", "lower", "upper"] + [
        f"est_{r:03d}" for r in range(data.curves.shape[0])
    ]
    columns = [data.grid, data.truth, data.lower, data.upper, *data.curves]
    rows = zip(*(col.tolist() for col in columns))
    write_csv(args.out_csv, header, rows)
    write_json(sidecar_path(args.out_csv), {"config": config.to_dict()})
    if args.out_image:
        from .plotting import render_overlay

        render_overlay(data, args.out_image)
    return 0


def _cmd_bias_sweep(args) -> int:
    config = _load_config(args)
    rows = run_bias_sweep(config, workers=resolve_workers(args.workers))
    write_csv(
        args.out,
        [
            "delta",
            "n",
            "reps",
            "mean_sup_abs_error",
            "sup_abs_bias",
            "mean_signed_error_at_ref",
            "ref_t",
        ],
        (
            (
                r.delta,
                r.n,
                r.reps,
                r.mean_sup_abs_error,
                r.sup_abs_bias,
                r.mean_signed_error_at_ref,
                r.ref_t,
            )
            for r in rows
        ),
    )
    write_json(sidecar_path(args.out), {"config": config.to_dict()})
    return 0


def _cmd_quantile(args) -> int:
    levels = [float(v) for v in args.level.split(",")]
    lines = [
        f"{format_float(level)},{format_float(max_abs_brownian_quantile(level))}"
        for level in levels
    ]
    text = "level,quantile\n" + "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-lab",
        description="Jump-measure distribution function estimation from high-frequency increments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw increments, write CSV k,x")
    _add_model_arg(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("truth", help="tabulate the true target function")
    _add_model_arg(p)
    p.add_argument("--target", choices=["N", "calN"], default="N")
    p.add_argument("--clip", choices=list(ClipFunction.KINDS), default="min_one_inv_x2")
    p.add_argument("--zeta", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-9)
    _add_grid_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_truth)

    for name, help_text in (
        ("estimate", "estimate N or the tail function from increments"),
        ("band", "estimate with a confidence band (CSV t,lower,estimate,upper)"),
        ("test", "KS-type band test of a hypothesized curve"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--in", dest="infile", required=True, help="increments CSV (k,x)")
        p.add_argument("--delta", type=float, required=True)
        p.add_argument("--method", choices=["direct", "spectral"], default="spectral")
        p.add_argument("--clip", choices=list(ClipFunction.KINDS), default="min_one_inv_x2")
        p.add_argument("--zeta", type=float, default=0.1)
        _add_grid_args(p)
        _add_spectral_args(p)
        if name == "estimate":
            p.add_argument("--target", choices=["N", "calN"], default="N")
            p.add_argument("--out", required=True)
            p.set_defaults(func=_cmd_estimate)
        elif name == "band":
            p.add_argument("--level", type=float, default=0.9)
            p.add_argument("--out", required=True)
            p.set_defaults(func=_cmd_band)
        else:
            p.add_argument("--level", type=float, default=0.9)
            p.add_argument("--hypothesis-model", default=None)
            p.add_argument("--hypothesis-csv", default=None)
            p.add_argument("--tol", type=float, default=1e-9)
            p.add_argument("--out", default=None)
            p.set_defaults(func=_cmd_test)

    for name, help_text, fn in (
        ("coverage", "Monte Carlo coverage experiment", _cmd_coverage),
        ("figure", "fan chart CSV and optional image", _cmd_figure),
        ("bias-sweep", "mean sup-error across deltas", _cmd_bias_sweep),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="experiment config JSON file")
        _add_model_arg(p, required=False)
        p.add_argument("--method", choices=["direct", "spectral"], default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--level", type=float, default=None)
        p.add_argument("--base-seed", dest="base_seed", type=int, default=None)
        p.add_argument("--t-min", type=float, default=None)
        p.add_argument("--t-max", type=float, default=None)
        p.add_argument("--workers", type=int, default=None)
        _add_spectral_args(p, concrete=False)
        if name == "coverage":
            p.add_argument("--out", default=None)
        elif name == "figure":
            p.add_argument("--out-csv", required=True)
            p.add_argument("--out-image", default=None)
        else:
            p.add_argument("--deltas", default=None, help="comma separated, e.g. 0.01,0.001")
            p.add_argument("--time-horizon", type=float, default=None)
            p.add_argument("--out", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("quantile", help="quantiles of max |B| over [0,1]")
    p.add_argument("--level", required=True, help="level or comma separated levels")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_quantile)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"estimation failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
