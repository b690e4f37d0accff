"""Command-line front end.

Commands
--------
synth         synthesize a noise-only acceleration trace for a catalog sensor
process       integrate a trace, detect end of shaking, apply the correction
mse-validate  Monte Carlo check of analytic displacement error curves
classify      conditional label matrix and error probability for one model
pe-curves     p_e versus duration curves per sensor and hazard level

All outputs are CSV, written atomically, and deterministic given the flags
and config.  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import CatalogError, load_catalog
from .classification import (
    DriftThresholds,
    QuadratureError,
    RelativeDisplacementModel,
    conditional_matrix,
)
from .kinematics import (
    AccelTrace,
    EosNotFoundError,
    apply_zupt,
    detect_eos,
    double_integrate,
    error_variance,
    read_trace,
    remove_bias,
    zupt_coefficients,
)
from .noise import autocovariance, derive_seed, resolve_densities, synthesize_noise
from .scenario import (
    PeCurve,
    expected_pe,
    load_duration_cdf,
    load_hazards,
    sigma_x_for,
)


class UsageError(ValueError):
    """Bad arguments or configuration; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Parsed pe-curves run configuration."""

    catalog_path: Path | None
    hazards_path: Path | None
    duration_cdf_path: Path | None
    dt: float
    t_grid: np.ndarray
    seed: int
    out_dir: Path
    mode: str


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sensor_spec(catalog_path, name, sample_rate):
    catalog = load_catalog(catalog_path, sample_rate=sample_rate)
    if name not in catalog:
        known = ", ".join(catalog)
        raise UsageError(f"unknown sensor '{name}' (catalog has: {known})")
    return catalog[name]


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = _sensor_spec(args.catalog, args.sensor, 1.0 / args.dt)
    realization = synthesize_noise(spec, args.n, args.seed)
    trace = AccelTrace(samples=realization.samples, dt=args.dt)
    lines = [
        f"# sensor={args.sensor} n={args.n} seed={args.seed} dt={args.dt:.10g}",
        "t,ax",
    ]
    for t, a in zip(trace.times, trace.samples):
        lines.append(f"{t:.10g},{a:.12g}")
    _atomic_write(Path(args.out), "\n".join(lines) + "\n")
    return 0


def _white_only(spec):
    from dataclasses import replace

    resolved = resolve_densities(spec)
    return replace(
        resolved, arw_density=resolved.arw_density or 0.0,
        bias_instability=None, rrw_density=None,
    )


def _cmd_process(args: argparse.Namespace) -> int:
    trace = read_trace(args.trace)
    spec = _sensor_spec(args.catalog, args.sensor, 1.0 / trace.dt)
    trace = remove_bias(trace, args.rest_window, side="end")

    sigma = math.sqrt(autocovariance(spec, len(trace)).r[0])
    eos = detect_eos(trace, sigma=sigma, window_w=args.window)
    n = eos.eos_index

    window = AccelTrace(
        samples=trace.samples[:n], dt=trace.dt, bias_removed=True
    )
    est = double_integrate(window)
    coeffs = zupt_coefficients(n, mode="simplified")
    est = apply_zupt(est, eos, coeffs)

    model_spec = _white_only(spec) if args.mode == "white" else spec
    r = autocovariance(model_spec, n)
    var_plain = error_variance(r, n, dt=trace.dt)
    var_zupt = error_variance(r, n, dt=trace.dt, with_zupt=True)

    lines = [
        f"# sensor={args.sensor} rest_window={args.rest_window:.10g} "
        f"window_w={args.window:.10g} eos_index={n} delta={eos.delta:.10g}",
        "i,t,v,s,s_zupt,sigma_s,sigma_s_zupt",
    ]
    times = window.times
    for k in range(n):
        lines.append(
            f"{k + 1},{times[k]:.10g},{est.velocity[k]:.12g},"
            f"{est.displacement[k]:.12g},{est.displacement_zupt[k]:.12g},"
            f"{math.sqrt(var_plain[k]):.12g},{math.sqrt(max(var_zupt[k], 0.0)):.12g}"
        )
    _atomic_write(Path(args.out), "\n".join(lines) + "\n")
    return 0


def _cmd_mse_validate(args: argparse.Namespace) -> int:
    spec = _sensor_spec(args.catalog, args.sensor, 1.0 / args.dt)
    if args.mode == "white":
        spec = _white_only(spec)
    n, dt = args.n, args.dt
    checkpoints = sorted({max(1, n // 4), max(1, n // 2), n})

    r = autocovariance(spec, n)
    var_plain = error_variance(r, n, dt=dt)
    var_zupt = error_variance(r, n, dt=dt, with_zupt=True)
    coeffs = zupt_coefficients(n, mode="simplified").c

    sq_plain = np.zeros(len(checkpoints))
    sq_zupt = np.zeros(len(checkpoints))
    idx = np.array(checkpoints) - 1
    for trial in range(args.trials):
        z = synthesize_noise(spec, n, derive_seed(args.seed, trial)).samples
        v = np.cumsum(z) * dt
        s = np.cumsum(v) * dt
        s_z = s[idx] + coeffs[idx] * v[-1] * dt
        sq_plain += s[idx] ** 2
        sq_zupt += s_z**2
    emp_plain = np.sqrt(sq_plain / args.trials)
    emp_zupt = np.sqrt(sq_zupt / args.trials)

    lines = [
        f"# sensor={args.sensor} n={n} dt={dt:.10g} trials={args.trials} "
        f"seed={args.seed} tol={args.tol:.10g}",
        "i,sigma_s_analytic,sigma_s_empirical,sigma_s_zupt_analytic,"
        "sigma_s_zupt_empirical",
    ]
    worst = 0.0
    for j, i in enumerate(checkpoints):
        ana_p = math.sqrt(var_plain[i - 1])
        ana_z = math.sqrt(max(var_zupt[i - 1], 0.0))
        worst = max(
            worst,
            abs(emp_plain[j] / ana_p - 1.0),
            abs(emp_zupt[j] / ana_z - 1.0),
        )
        lines.append(
            f"{i},{ana_p:.12g},{emp_plain[j]:.12g},{ana_z:.12g},{emp_zupt[j]:.12g}"
        )
    lines.append(f"# max_relative_deviation={worst:.6g}")
    _atomic_write(Path(args.out), "\n".join(lines) + "\n")
    if worst > args.tol:
        print(
            f"mse-validate: deviation {worst:.3g} exceeds tolerance {args.tol:.3g}",
            file=sys.stderr,
        )
        return 1
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    th = DriftThresholds(
        idr0=args.idr0, idr1=args.idr1, floor_height=args.floor_height
    )
    model = RelativeDisplacementModel(
        mu_d=args.mu_d, sigma_d=args.sigma_d, sigma_x=args.sigma_x
    )
    matrix = conditional_matrix(model, th)
    lines = [
        f"# mu_d_m={args.mu_d:.10g} sigma_d_m={args.sigma_d:.10g} "
        f"sigma_x_m={args.sigma_x:.10g} d0_m={th.d0:.10g} d1_m={th.d1:.10g}",
        "# rows are true labels, columns measured labels, order IO,LS,CP",
    ]
    for row in matrix.p:
        lines.append(",".join(f"{v:.12g}" for v in row))
    lines.append(f"pe,{matrix.pe:.12g}")
    _atomic_write(Path(args.out), "\n".join(lines) + "\n")
    return 0


_RUN_KEYS = {"dt", "t_start", "t_stop", "t_step", "mode", "seed"}
_PATH_KEYS = {"sensor_catalog", "hazards", "duration_cdf"}


def _load_run_config(path: Path, out_dir: Path) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    for section in parser.sections():
        if section not in ("run", "paths"):
            raise UsageError(f"{path}: unknown section [{section}]")
    run = parser["run"] if parser.has_section("run") else {}
    paths = parser["paths"] if parser.has_section("paths") else {}
    unknown = set(run) - _RUN_KEYS
    if unknown:
        raise UsageError(f"{path}: unknown [run] keys: {sorted(unknown)}")
    unknown = set(paths) - _PATH_KEYS
    if unknown:
        raise UsageError(f"{path}: unknown [paths] keys: {sorted(unknown)}")

    def _resolve(key: str) -> Path | None:
        if key not in paths:
            return None
        p = Path(paths[key])
        if not p.is_absolute():
            p = path.parent / p
        if not p.exists():
            raise UsageError(f"{path}: {key} file not found: {p}")
        return p

    dt = float(run.get("dt", 0.01))
    if not dt > 0.0:
        raise UsageError("dt must be > 0")
    t_start = float(run.get("t_start", 1.0))
    t_stop = float(run.get("t_stop", 60.0))
    t_step = float(run.get("t_step", 1.0))
    if not (t_step > 0.0 and t_stop >= t_start >= dt):
        raise UsageError("invalid duration grid")
    mode = run.get("mode", "exact")
    if mode not in ("white", "exact"):
        raise UsageError("mode must be 'white' or 'exact'")
    t_grid = np.arange(t_start, t_stop + t_step / 2.0, t_step)
    return RunConfig(
        catalog_path=_resolve("sensor_catalog"),
        hazards_path=_resolve("hazards"),
        duration_cdf_path=_resolve("duration_cdf"),
        dt=dt,
        t_grid=t_grid,
        seed=int(run.get("seed", 0)),
        out_dir=out_dir,
        mode=mode,
    )


def _cmd_pe_curves(args: argparse.Namespace) -> int:
    cfg = _load_run_config(Path(args.config), Path(args.out))
    catalog = load_catalog(cfg.catalog_path, sample_rate=1.0 / cfg.dt)
    hazards = load_hazards(cfg.hazards_path)
    durations = load_duration_cdf(cfg.duration_cdf_path)

    summary = ["sensor,hazard,expected_pe"]
    for name, spec in catalog.items():
        for hazard in hazards.values():
            points = []
            for T in cfg.t_grid:
                try:
                    sigma_x = sigma_x_for(spec, float(T), cfg.dt, cfg.mode)
                    model = RelativeDisplacementModel(
                        mu_d=hazard.mu_d, sigma_d=hazard.sigma_d, sigma_x=sigma_x
                    )
                    points.append((float(T), conditional_matrix(model).pe))
                except QuadratureError as exc:
                    print(
                        f"pe-curves: {name}/{hazard.name} T={T:g}: {exc}",
                        file=sys.stderr,
                    )
            if not points:
                continue
            curve_lines = [
                f"# sensor={name} hazard={hazard.name} mode={cfg.mode} "
                f"dt={cfg.dt:.10g}",
                "T_seconds,pe",
            ]
            for T, pe in points:
                curve_lines.append(f"{T:.10g},{pe:.12g}")
            out_path = cfg.out_dir / f"pe_{name}_{hazard.name}.csv"
            _atomic_write(out_path, "\n".join(curve_lines) + "\n")
            curve = PeCurve(sensor=name, hazard=hazard.name, points=tuple(points))
            summary.append(f"{name},{hazard.name},{expected_pe(curve, durations):.12g}")
    _atomic_write(cfg.out_dir / "summary.csv", "\n".join(summary) + "\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftgauge",
        description="floor displacement estimation and sensor selection tools",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="synthesize a noise-only trace")
    synth.add_argument("--sensor", required=True, help="catalog sensor name")
    synth.add_argument("--n", type=int, required=True, help="sample count")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--dt", type=float, default=0.01, help="sample interval (s)")
    synth.add_argument("--catalog", default=None, help="catalog file (bundled default)")
    synth.add_argument("--out", required=True, help="output trace CSV")
    synth.set_defaults(func=_cmd_synth)

    process = sub.add_parser("process", help="integrate and correct a trace")
    process.add_argument("--trace", required=True, help="input t,ax CSV")
    process.add_argument("--sensor", required=True)
    process.add_argument("--rest-window", dest="rest_window", type=float, default=2.0)
    process.add_argument("--window", type=float, default=1.0, help="quiet window W (s)")
    process.add_argument("--mode", choices=("white", "exact"), default="exact",
                         help="noise model behind the analytic sigma columns")
    process.add_argument("--catalog", default=None)
    process.add_argument("--out", required=True)
    process.set_defaults(func=_cmd_process)

    mse = sub.add_parser("mse-validate", help="Monte Carlo vs analytic error")
    mse.add_argument("--sensor", required=True)
    mse.add_argument("--n", type=int, default=2000)
    mse.add_argument("--trials", type=int, default=5000)
    mse.add_argument("--seed", type=int, default=0)
    mse.add_argument("--dt", type=float, default=0.01)
    mse.add_argument("--tol", type=float, default=0.05)
    mse.add_argument("--mode", choices=("white", "exact"), default="exact")
    mse.add_argument("--catalog", default=None)
    mse.add_argument("--out", required=True)
    mse.set_defaults(func=_cmd_mse_validate)

    cls = sub.add_parser("classify", help="conditional label matrix")
    cls.add_argument("--mu-d", dest="mu_d", type=float, required=True)
    cls.add_argument("--sigma-d", dest="sigma_d", type=float, required=True)
    cls.add_argument("--sigma-x", dest="sigma_x", type=float, required=True)
    cls.add_argument("--idr0", type=float, default=0.007)
    cls.add_argument("--idr1", type=float, default=0.05)
    cls.add_argument("--floor-height", dest="floor_height", type=float, default=4.0)
    cls.add_argument("--out", required=True)
    cls.set_defaults(func=_cmd_classify)

    pe = sub.add_parser("pe-curves", help="p_e versus duration per sensor/hazard")
    pe.add_argument("--config", required=True, help="run configuration file")
    pe.add_argument("--out", required=True, help="output directory")
    pe.set_defaults(func=_cmd_pe_curves)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, CatalogError) as exc:
        print(f"driftgauge: {exc}", file=sys.stderr)
        return 2
    except (EosNotFoundError, QuadratureError, ValueError, OSError) as exc:
        print(f"driftgauge: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
