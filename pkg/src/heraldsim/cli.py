"""Command-line front end.

Subcommands write CSV (to ``--out`` or stdout) with the resolved config
echoed as ``#`` comment lines. Exit codes: 0 ok, 2 config error, 3 numeric
failure.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import FIGURE_CURVES, SingularityError, advantage_ratio
from .estimation import DegenerateVarianceError, EmptyTrialError
from .experiment import measure, measure_g2, sweep
from .model import (
    PROFILES,
    ConfigError,
    dumps_config,
    load_config,
    predicted_heralding_fidelity,
    validate,
)
from .montecarlo import simulate_trial, write_time_tags

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def parse_grid(spec: str) -> list:
    """``start:stop:step`` (stop inclusive) or a comma-separated list."""
    try:
        if ":" in spec:
            start, stop, step = (float(x) for x in spec.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(round((stop - start) / step))
            grid = [round(start + i * step, 12) for i in range(n + 1)]
        else:
            grid = [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad grid spec {spec!r}; use start:stop:step or a,b,c") from None
    if not grid or any(not 0.0 <= g <= 1.0 for g in grid):
        raise ConfigError(f"grid values must lie in [0,1]: {spec!r}")
    return grid


def resolve_config(args, need_hbt=False):
    if args.config and args.profile:
        raise ConfigError("give either --config or --profile, not both")
    if args.config:
        cfg = load_config(args.config)
        if need_hbt and not cfg.hbt_mode:
            raise ConfigError("g2 needs a config with hbt_mode = true")
    else:
        cfg = PROFILES[args.profile or "desk"]()
        if need_hbt:
            cfg = replace(cfg, hbt_mode=True)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if cfg.master_seed is None:
        raise ConfigError("no seed: set master_seed in the config or pass --seed")
    if getattr(args, "switch", None):
        cfg = cfg.with_switch(args.switch == "on")
    if getattr(args, "trials", None):
        cfg = replace(cfg, repetitions=args.trials)
    report = validate(cfg)
    if not report.ok:
        raise ConfigError("; ".join(report.violations))
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return cfg


@contextlib.contextmanager
def _output(path):
    if path:
        with open(path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _echo(fh, cfg):
    fh.write(f"# heraldsim {__version__}\n")
    for line in dumps_config(cfg).splitlines():
        fh.write(f"# {line}\n" if line else "#\n")


def _row(fh, values):
    fh.write(",".join(fmt(v) for v in values) + "\n")


def _ratio_or_inf(eta, setup, eta_s):
    # the lossless Fock curve diverges at eta=1
    try:
        return advantage_ratio(eta, setup, eta_s)
    except SingularityError:
        return float("inf")


def cmd_sweep_analytic(args):
    cfg = resolve_config(args)
    grid = parse_grid(args.grid or "0:1:0.05")
    setup = cfg.idler_channel.setup_efficiency
    eta_s = predicted_heralding_fidelity(cfg)
    with _output(args.out) as fh:
        _echo(fh, cfg)
        header = ["eta"] + [name for name, _, _ in FIGURE_CURVES] + ["r_shot_noise", "r_config"]
        fh.write(",".join(header) + "\n")
        for eta in grid:
            vals = [_ratio_or_inf(eta, s, f) for _, s, f in FIGURE_CURVES]
            _row(fh, [eta, *vals, 1.0, _ratio_or_inf(eta, setup, eta_s)])
    return 0


def cmd_run(args):
    cfg = resolve_config(args)
    m = measure(cfg, workers=args.workers)
    rep = m.report
    with _output(args.out) as fh:
        _echo(fh, cfg)
        fh.write("trial,n_s,n_i,n_c,eta_hat,var_eta,n_probe,precision_per_photon,"
                 "advantage,advantage_stderr,eta_s,eta_setup_measured,r_analytic\n")
        cal = m.calibration.eta_setup_measured
        for i, t in enumerate(m.trials):
            eta_hat = (t.n_coincidence - t.dark_estimate) / t.n_herald / cal
            _row(fh, [i, t.n_herald, t.n_idler, t.n_coincidence, eta_hat])
        mean = lambda attr: float(np.mean([getattr(t, attr) for t in m.trials]))  # noqa: E731
        fh.write("summary," + ",".join(fmt(v) for v in [
            mean("n_herald"), mean("n_idler"), mean("n_coincidence"), rep.eta_hat, rep.var_eta,
            rep.n_probe, rep.precision_per_photon, rep.advantage, rep.advantage_stderr, rep.eta_s,
            cal, m.r_analytic]) + "\n")
    if args.export_tags:
        _export_tags(cfg, Path(args.export_tags), args.export_count)
    return 0


def _export_tags(cfg, directory: Path, count: int):
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(min(count, cfg.repetitions)):
        _, streams = simulate_trial(cfg, i, keep_streams=True)
        with open(directory / f"trial_{i:05d}.tsv", "w") as fh:
            write_time_tags(streams.values(), fh)


def cmd_sweep(args):
    cfg = resolve_config(args)
    grid = parse_grid(args.grid or "0.65,0.8,0.9,0.97,1.0")
    if 0.0 in grid:
        raise ConfigError("sweep grid must exclude eta=0 (no coincidences to estimate from)")
    rows = sweep(cfg, grid, workers=args.workers)
    with _output(args.out) as fh:
        _echo(fh, cfg)
        fh.write("eta,r_analytic,r_simulated,stderr,n_trials,eta_hat,eta_s,eta_setup_measured\n")
        for point, m in rows:
            _row(fh, [point.eta, point.r_analytic, point.r_simulated, point.stderr, point.n_trials,
                      m.report.eta_hat, m.report.eta_s, m.calibration.eta_setup_measured])
    return 0


def cmd_g2(args):
    cfg = resolve_config(args, need_hbt=True)
    res = measure_g2(cfg, workers=args.workers)
    est = res.estimate
    with _output(args.out) as fh:
        _echo(fh, cfg)
        fh.write("quantity,value\n")
        for key, val in [("g2", est.g2), ("g2_stderr", est.stderr), ("g2_accidental_prediction", res.prediction),
                         ("n_herald", est.n_herald), ("n_sa", est.n_sa), ("n_sb", est.n_sb),
                         ("n_sab", est.n_sab), ("trials", cfg.repetitions)]:
            fh.write(f"{key},{fmt(val)}\n")
    return 0


def cmd_dump_config(args):
    cfg = resolve_config(args)
    with _output(args.out) as fh:
        fh.write(dumps_config(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heraldsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, switch=True, grid=False, workers=True):
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--profile", choices=sorted(PROFILES), help="built-in config (default: desk)")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--out", help="output path (default: stdout)")
        if switch:
            p.add_argument("--switch", choices=["on", "off"], help="force the switch state")
            p.add_argument("--trials", type=int, help="override repetitions")
        if grid:
            p.add_argument("--grid", help="eta grid, start:stop:step or comma list")
        if workers:
            p.add_argument("--workers", type=int, default=1, help="worker processes for trials")

    p = sub.add_parser("sweep-analytic", help="theory curves of advantage vs transmission")
    common(p, switch=False, grid=True, workers=False)
    p.set_defaults(func=cmd_sweep_analytic)

    p = sub.add_parser("run", help="simulate one experiment; per-trial CSV plus summary")
    common(p)
    p.add_argument("--export-tags", metavar="DIR", help="write raw time tags of the first trials")
    p.add_argument("--export-count", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="simulated vs analytic advantage over a transmission grid")
    common(p, grid=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("g2", help="heralded g2(0) by triple coincidences")
    common(p)
    p.set_defaults(func=cmd_g2)

    p = sub.add_parser("dump-config", help="print the resolved config as TOML")
    common(p, workers=False)
    p.set_defaults(func=cmd_dump_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateVarianceError, EmptyTrialError, SingularityError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
