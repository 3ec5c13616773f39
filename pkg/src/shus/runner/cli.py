"""Command-line entry point: ``shus <command> [--config FILE] [--key value ...]``.

Commands
--------
trajectory    one chain at a single ``beta``: positions and weight traces
exit-times    mean first exit times over a ``beta`` grid plus scaling fits
weight-stats  replica statistics of ``ln theta_n`` plus decay fits
reference     quadrature reference weights
validate      invariant checks; exits nonzero on any failure

Every configuration key can be set in the config file or as a flag
(underscores become dashes: ``gamma_star`` -> ``--gamma-star``).  Every output
file starts with the fully resolved configuration as ``#`` comment lines.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..chain import Chain
from ..diagnostics import (
    fit_bias_decay,
    fit_variance_decay,
    fits_from_estimates,
    log_checkpoints,
    mean_exit_time,
    replica_log_weights,
    weight_statistics,
    write_exit_times_csv,
)
from ..model import reference_weights
from .config import FIELD_NAMES, ExperimentConfig, parse_value, resolve_config
from .validate import FAULTS, run_checks

logger = logging.getLogger("shus")

_HELP = {
    "scheme": "shus | wl | shus-alpha | partial-bias",
    "gamma_star": "Wang-Landau scale (default: d)",
    "alpha": "stepsize decay exponent (wl, shus-alpha)",
    "a": "partial-bias exponent in (0, 1]",
    "M": "renormalization threshold",
    "beta": "inverse temperature (trajectory, weight-stats, reference)",
    "betas": "comma-separated increasing grid (exit-times)",
    "sigma": "proposal scale (default: 2R/d)",
    "max_iters": "censoring cap for exit times",
    "stride": "trace subsampling stride (trajectory)",
    "sweep": "none | gamma | gamma_star (exit-times)",
    "sweep_values": "comma-separated values of the swept parameter",
    "fit_window": "low,high step range for decay fits (default: last decade)",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="key = value configuration file")
    g = p.add_argument_group("configuration overrides")
    for name in FIELD_NAMES:
        g.add_argument(
            "--" + name.replace("_", "-"),
            dest="cfg_" + name,
            metavar="V",
            default=argparse.SUPPRESS,
            help=_HELP.get(name),
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shus", description="Self-healing umbrella sampling experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("trajectory", "trace one chain"),
        ("exit-times", "mean first exit times and scaling fits"),
        ("weight-stats", "variance and bias of the log-weights"),
        ("reference", "quadrature reference weights"),
    ]:
        _add_config_flags(sub.add_parser(name, help=helptext))
    pv = sub.add_parser("validate", help="run the invariant checks")
    pv.add_argument("--inject-fault", choices=sorted(FAULTS), help="corrupt one update rule first")
    pv.add_argument("--quick", action="store_true", help="ten times fewer samples")
    pv.add_argument("--report", metavar="FILE", help="also write the JSON report here")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {}
    for key, text in vars(args).items():
        if key.startswith("cfg_"):
            name = key[4:]
            overrides[name] = parse_value(name, text)
    return resolve_config(args.config, overrides)


def _output_path(cfg: ExperimentConfig, filename: str) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / filename


def _header(cfg: ExperimentConfig, command: str) -> list[str]:
    return [f"shus {__version__} {command}"] + cfg.header_lines()


def _write_rows(path: Path, header: list[str], columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


def _write_json(path: Path, header: list[str], payload: dict) -> None:
    doc = {"config": header, **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _num(x) -> str:
    return repr(float(x))


def _finite(x):
    # JSON has no NaN
    x = float(x)
    return x if np.isfinite(x) else None


# ---------------------------------------------------------------------------
# commands


def cmd_trajectory(cfg: ExperimentConfig) -> int:
    model = cfg.model()
    chain = Chain(model, cfg.make_scheme(), sigma=cfg.resolved_sigma, seed=cfg.seed, M=cfg.M)
    traj, weights = [], []
    left = cfg.n_steps
    while left > 0:
        m = min(cfg.stride, left)
        rows = chain.run_traced(m, stride=m)
        left -= m
        n, x1, x2, stratum, lt_hit, g = rows[-1]
        traj.append([int(n), _num(x1), _num(x2), int(stratum), _num(lt_hit), _num(g)])
        for i, lt in enumerate(chain.log_theta, start=1):
            weights.append([int(n), i, _num(lt), _num(g), chain.renorm_count])
    header = _header(cfg, "trajectory")
    p1 = _output_path(cfg, "trajectory.csv")
    p2 = _output_path(cfg, "weights.csv")
    _write_rows(p1, header, ["n", "x1", "x2", "stratum", "ln_theta_hit", "stepsize"], traj)
    _write_rows(p2, header, ["n", "stratum", "ln_theta", "stepsize", "r_n"], weights)
    print(f"wrote {p1} and {p2}")
    return 0


def cmd_exit_times(cfg: ExperimentConfig) -> int:
    if cfg.sweep == "none":
        cells = [("", {})]
    else:
        cells = [(f"{cfg.sweep}={v!r}", {cfg.sweep: v}) for v in cfg.sweep_values]
    header = _header(cfg, "exit-times")
    fits_rows, fits_json, failures = [], {}, []
    prefactors = {}
    for label, override in cells:
        scheme = cfg.make_scheme(**override)
        estimates = mean_exit_time(
            cfg.betas, cfg.K, scheme, cfg.d, sigma=cfg.resolved_sigma, half_width=cfg.half_width,
            seed=cfg.seed, cap=cfg.max_iters, threshold=cfg.threshold, M=cfg.M, workers=cfg.workers,
        )
        fname = "exit_times.csv" if not label else f"exit_times_{label.replace('=', '_')}.csv"
        write_exit_times_csv(_output_path(cfg, fname), estimates, header + ([f"cell {label}"] if label else []))
        cell = {
            "means": {repr(e.beta): _finite(e.mean) for e in estimates},
            "stderr": {repr(e.beta): _finite(e.stderr) for e in estimates},
            "censored": {repr(e.beta): e.n_censored for e in estimates},
        }
        try:
            fits = fits_from_estimates(estimates)
        except ValueError as exc:
            failures.append(f"{label or 'grid'}: {exc}")
            cell["error"] = str(exc)
        else:
            for kind, fit in fits.items():
                param = f"{label}/{kind}" if label else kind
                fits_rows.append([param, _num(fit.slope), _num(fit.prefactor), _num(fit.residual)])
                cell[kind] = fit.as_dict()
            prefactors[label] = fits["exponential"].prefactor
        fits_json[label or "grid"] = cell
    payload = {"cells": fits_json}
    if cfg.sweep != "none" and prefactors:
        base = next(iter(prefactors.values()))
        payload["prefactor_ratios"] = {k: v / base for k, v in prefactors.items()}
    _write_rows(_output_path(cfg, "fits.csv"), header, ["param", "slope", "prefactor", "residual"], fits_rows)
    _write_json(_output_path(cfg, "fits.json"), header, payload)
    for key, cell in fits_json.items():
        if "exponential" in cell:
            print(f"{key}: mu={cell['exponential']['slope']:.4f} C={cell['exponential']['prefactor']:.4g} "
                  f"power={cell['power']['slope']:.4f}")
    if failures:
        for f in failures:
            print(f"fit aborted: {f}", file=sys.stderr)
        return 3
    return 0


def decay_window(cfg: ExperimentConfig) -> tuple[float, float]:
    return tuple(cfg.fit_window) if cfg.fit_window else (cfg.n_steps / 10.0, float(cfg.n_steps))


def cmd_weight_stats(cfg: ExperimentConfig) -> int:
    if cfg.K < 2:
        raise ValueError("weight-stats needs K >= 2")
    model = cfg.model()
    ref = reference_weights(model, cfg.grid_resolution, tuple(cfg.x2_bounds))
    ck = log_checkpoints(cfg.n_steps, cfg.per_decade, min(cfg.n_min, cfg.n_steps))
    logs = replica_log_weights(model, cfg.make_scheme(), cfg.K, ck, sigma=cfg.resolved_sigma,
                               seed=cfg.seed, M=cfg.M, workers=cfg.workers)
    stats = weight_statistics(logs, ref.theta_star, ck)
    header = _header(cfg, "weight-stats")
    stats.to_csv(_output_path(cfg, "weight_stats.csv"), header)
    window = decay_window(cfg)
    payload = {"window": list(window)}
    if np.all(stats.variance > 0):
        var_exp = fit_variance_decay(stats, window)
        payload["variance_exponents"] = var_exp.tolist()
        payload["variance_exponent_mean"] = float(var_exp.mean())
    else:
        payload["variance_exponents"] = None
    # the bias fit uses every checkpoint where the systematic part dominates
    try:
        fit = fit_bias_decay(stats)
        payload["bias_exponent"] = -fit.slope
        payload["bias_fit_points"] = fit.n_points
    except ValueError as exc:
        payload["bias_exponent"] = None
        payload["bias_fit_error"] = str(exc)
    _write_json(_output_path(cfg, "decay.json"), header, payload)
    print(json.dumps({k: payload[k] for k in payload if k != "variance_exponents"}))
    return 0


def cmd_reference(cfg: ExperimentConfig) -> int:
    ref = reference_weights(cfg.model(), cfg.grid_resolution, tuple(cfg.x2_bounds))
    path = _output_path(cfg, "reference.csv")
    ref.to_csv(path, _header(cfg, "reference"))
    print(f"wrote {path} (estimated relative error {ref.estimated_error:.2e})")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    checks = run_checks(args.inject_fault, quick=args.quick)
    report = {
        "version": __version__,
        "fault": args.inject_fault,
        "passed": all(c.passed for c in checks),
        "checks": [c.as_dict() for c in checks],
    }
    text = json.dumps(report, indent=2)
    print(text)
    if args.report:
        Path(args.report).write_text(text + "\n")
    return 0 if report["passed"] else 1


COMMANDS = {
    "trajectory": cmd_trajectory,
    "exit-times": cmd_exit_times,
    "weight-stats": cmd_weight_stats,
    "reference": cmd_reference,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "validate":
        return cmd_validate(args)
    try:
        cfg = config_from_args(args)
    except (KeyError, ValueError, OSError) as exc:
        parser.error(str(exc))
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
