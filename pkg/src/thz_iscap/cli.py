"""Command-line entry point.

Exit codes: 0 success, 2 infeasible problem, 3 configuration error,
4 numeric or domain error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import SWEEP_VARIABLES, ConfigError, available_presets, load_config, with_overrides
from .link import snapshot
from .optimizer import (
    P1,
    P2,
    OptimizationOutcome,
    Status,
    grid_oracle,
    maximize_E_subject_R,
    maximize_R_subject_E,
)
from .propagation import DomainError
from .sweep import records_to_csv, records_to_string, run_sweep

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thz-iscap", description="THz sensing/SWIPT link simulator and optimizer")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario TOML file")
    common.add_argument("--preset", help="named preset the config is layered over (default table1)")
    common.add_argument("--seed", type=int, help="seed for Monte Carlo fading")
    common.add_argument("--fading", choices=("mc", "mean"), help="fading mode override")
    common.add_argument("--eh", choices=("linear", "nonlinear"), help="harvester model override")

    sw = sub.add_parser("sweep", parents=[common], help="write a one-dimensional sweep as CSV")
    sw.add_argument("--out", type=Path, help="CSV path (default: config output_path, else stdout)")
    sw.add_argument("--variable", choices=SWEEP_VARIABLES, help="swept quantity")
    sw.add_argument("--from", dest="start", type=float, help="first sweep value")
    sw.add_argument("--to", dest="stop", type=float, help="last sweep value")
    sw.add_argument("--steps", type=int, help="number of sweep points")

    opt = sub.add_parser("optimize", parents=[common], help="solve P1 or P2")
    opt.add_argument("--problem", choices=("p1", "p2"), required=True)
    opt.add_argument("--r-eps", type=float, help="rate floor for p1 (bits/Hz)")
    opt.add_argument("--e-eps", type=float, help="energy floor for p2 (W*s)")
    opt.add_argument("--verify", action="store_true", help="also run the grid oracle and report the gap")

    sub.add_parser("presets", help="list built-in presets")
    sub.add_parser("validate-config", parents=[common], help="load a config and print the resolved scenario")
    return parser


def _load(args):
    cfg = load_config(args.config, args.preset)
    if args.seed is not None and args.seed < 0:
        raise ConfigError("--seed must be non-negative", "seed")
    return with_overrides(cfg, seed=args.seed, fading=args.fading, eh=args.eh)


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.6g}"


def format_outcome(out: OptimizationOutcome) -> str:
    iv = out.interval
    lines = [
        f"problem     {out.problem}",
        f"status      {out.status.value}",
        f"objective   {_fmt(out.objective_value)}",
        f"rho0*       {_fmt(out.rho0_star)}",
        f"rho1*       {_fmt(out.rho1_star)}",
        f"constraint  {_fmt(out.constraint_value)}",
        f"interval    [{_fmt(iv.lo)}, {_fmt(iv.hi)}] peak {_fmt(iv.peak)}" + (" (empty)" if iv.empty else ""),
        f"evaluations {out.evaluations}",
    ]
    return "\n".join(lines)


def run_optimize(cfg, problem, verify: bool = False, stream=None) -> OptimizationOutcome:
    """Solve ``problem`` for ``cfg``, print the outcome and optionally the oracle gap."""
    stream = stream or sys.stdout
    snap = snapshot(cfg.params)
    for w in snap.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if isinstance(problem, P1):
        out = maximize_E_subject_R(snap, problem.r_eps, cfg.solver)
    else:
        out = maximize_R_subject_E(snap, problem.e_eps, cfg.solver)
    print(format_outcome(out), file=stream)
    if out.status is Status.INFEASIBLE:
        limit = _best_attainable(snap, problem)
        print(f"infeasible: best attainable {'R' if isinstance(problem, P1) else 'E'} is {_fmt(limit)}",
              file=stream)
    if verify:
        ref = grid_oracle(snap, problem, cfg.solver.grid_step)
        print(f"oracle      {_fmt(ref.objective_value)} at ({_fmt(ref.rho0_star)}, {_fmt(ref.rho1_star)}),"
              f" {ref.evaluations} evaluations", file=stream)
        if out.status is not Status.INFEASIBLE and ref.status is not Status.INFEASIBLE:
            gap = (out.objective_value - ref.objective_value) / abs(ref.objective_value)
            print(f"gap         {gap:+.3e} relative", file=stream)
    return out


def _best_attainable(snap, problem) -> float:
    r0 = np.linspace(0.0, 0.999, 1000)
    if isinstance(problem, P1):
        return float(np.max(snap.rate(r0, 0.0)))
    return float(np.max(snap.energy(r0, 1.0)))


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    changes = {k: v for k, v in (("variable", args.variable), ("start", args.start),
                                  ("stop", args.stop), ("steps", args.steps)) if v is not None}
    if args.variable is not None and args.start is None and args.stop is None:
        changes.update(start=None, stop=None)
    if changes:
        spec = replace(cfg.sweep, **changes)
        if spec.steps < 1:
            raise ConfigError("--steps must be >= 1", "steps")
        lo, hi = spec.bounds(cfg.params)
        if spec.steps > 1 and not lo < hi:
            raise ConfigError(f"sweep range is empty (from={lo:g}, to={hi:g})", "sweep.from")
        cfg = replace(cfg, sweep=spec)
    records = run_sweep(cfg)
    out = args.out or (Path(cfg.output_path) if cfg.output_path else None)
    if out is None:
        sys.stdout.write(records_to_string(records))
    else:
        with open(out, "w", newline="") as fh:
            records_to_csv(records, fh)
        print(f"wrote {len(records)} rows to {out}", file=sys.stderr)
    return EXIT_OK


def _cmd_optimize(args) -> int:
    cfg = _load(args)
    if args.problem == "p1":
        if args.r_eps is None:
            raise ConfigError("--r-eps is required for p1", "r_eps")
        if args.r_eps < 0:
            raise ConfigError("--r-eps must be non-negative", "r_eps")
        problem = P1(args.r_eps)
    else:
        if args.e_eps is None:
            raise ConfigError("--e-eps is required for p2", "e_eps")
        if args.e_eps < 0:
            raise ConfigError("--e-eps must be non-negative", "e_eps")
        problem = P2(args.e_eps)
    out = run_optimize(cfg, problem, args.verify)
    return EXIT_INFEASIBLE if out.status is Status.INFEASIBLE else EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _load(args)
    p = cfg.params
    print(f"source      {cfg.source} (preset {cfg.preset})")
    print(f"frequency   {p.frequency / 1e9:g} GHz")
    print(f"tx_power    {p.tx_power:g} W")
    print(f"distance    {p.distance:g} m")
    print(f"total_time  {p.total_time:g} s")
    print(f"noise_power {p.noise_power:g} W")
    print(f"l0, alpha   {p.l0:g} m, {p.alpha:g} 1/s")
    print(f"bs_tx       D={p.bs_tx.aperture_diameter:g} m, eta={p.bs_tx.aperture_efficiency:g}")
    print(f"user_rx     D={p.user_rx.aperture_diameter:g} m, eta={p.user_rx.aperture_efficiency:g}")
    print(f"harvester   {p.eh_model}")
    print(f"fading      {p.fading}")
    print(f"absorption  {type(p.absorption).__name__}")
    print(f"solver      {cfg.solver}")
    print(f"sweep       {cfg.sweep}")
    for w in snapshot(p).warnings:
        print(f"warning: {w}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            for name in available_presets():
                print(name)
            return EXIT_OK
        handler = {"sweep": _cmd_sweep, "optimize": _cmd_optimize, "validate-config": _cmd_validate}
        return handler[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
