"""poissonint command-line interface.

Subcommands: simulate | convergence | energy-drift | verify | bench.
Exit codes: 0 ok, 1 verification failure, 2 config error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .csvio import write_csv
from .errors import ConfigError, IntegrationAborted, PoissonIntError, TimingConflict
from .experiments import (PRESETS, ExperimentConfig, config_from_dict, config_metadata, load_config,
                          preset_config, run_bench, run_convergence, run_energy_drift, run_simulate,
                          run_verify, trajectory_rows)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="poissonint", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"poissonint {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "convergence", "energy-drift", "verify", "bench"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--preset", help=f"named experiment ({', '.join(PRESETS)})")
        sp.add_argument("--out", help="output CSV path")
        sp.add_argument("--seed", type=int, help="seed for probe points")
        sp.add_argument("--full", action="store_true", help="original long horizon for energy-drift presets")
        sp.add_argument("--threads", type=int, default=1, help="worker processes for independent runs")
        if name == "verify":
            sp.add_argument("--system", help="model name when no config or preset is given")
            sp.add_argument("--n-points", type=int, help="number of probe points")
            sp.add_argument("--corrupt-structure", action="store_true",
                            help="negative control: perturb R so the Jacobi identity fails")
        if name == "convergence":
            sp.add_argument("--synthetic", action="store_true",
                            help="self-test on built-in quadratic error data")
    return p


def _resolve(args) -> ExperimentConfig:
    command = args.command
    overrides = {"seed": args.seed, "out": args.out}
    if command == "verify":
        overrides["n_points"] = args.n_points
        if args.corrupt_structure:
            overrides["corrupt_structure"] = True
    if args.config and args.preset:
        raise ConfigError("give --config or --preset, not both")
    if args.preset:
        cfg = preset_config(args.preset, full=args.full, **overrides)
        if cfg.command != command and command != "verify":
            raise ConfigError(f"preset {args.preset} is a {cfg.command} experiment")
        if command == "verify":
            cfg = config_from_dict({"command": "verify", "system": cfg.system, "params": cfg.params,
                                    **{k: v for k, v in overrides.items() if v is not None}})
        return cfg
    if args.config:
        cfg = load_config(args.config, command)
        for key, value in overrides.items():
            if value is not None:
                setattr(cfg, key, value)
        if args.full and cfg.full_T is not None:
            cfg.T = cfg.full_T
        return cfg
    if command == "verify" and args.system:
        return config_from_dict({"command": "verify", "system": args.system,
                                 **{k: v for k, v in overrides.items() if v is not None}})
    if command == "convergence" and getattr(args, "synthetic", False):
        return config_from_dict({"command": "convergence", "system": "synthetic", "synthetic": True,
                                 "methods": ["2ndEPI"], "h_ladder": [0.1, 0.05, 0.025, 0.0125],
                                 "T": 1.0, "out": args.out})
    raise ConfigError("nothing to run: give --config or --preset")


def _default_out(cfg: ExperimentConfig, stem: str) -> str:
    return cfg.out or os.path.join("results", f"{stem}.csv")


def _meta(cfg: ExperimentConfig, command: str) -> dict:
    return {"command": command, **config_metadata(cfg)}


def cmd_simulate(cfg: ExperimentConfig, threads: int) -> int:
    trajs = run_simulate(cfg, threads)
    base = _default_out(cfg, f"simulate-{cfg.system}")
    dim = trajs[0].states.shape[1]
    header = ["step", "time", *[f"z_{i + 1}" for i in range(dim)], "H", "rel_energy_err"]
    for method, tr in zip(cfg.methods, trajs):
        path = base if len(trajs) == 1 else _suffixed(base, method)
        write_csv(path, {**_meta(cfg, "simulate"), "method": method}, header, trajectory_rows(tr))
        print(path)
    return EXIT_OK


def _suffixed(path: str, tag: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}_{tag}{ext or '.csv'}"


def cmd_convergence(cfg: ExperimentConfig, threads: int) -> int:
    res = run_convergence(cfg, threads)
    rows = [["data", m, h, gx, gv] for m, h, gx, gv in res.rows]
    rows += [["slope", m, None, sx, sv] for m, (sx, sv) in res.slopes.items()]
    meta = _meta(cfg, "convergence")
    if res.gate_discrepancy is not None:
        meta["reference_gate_discrepancy"] = res.gate_discrepancy
        meta["reference_max_rel_energy_err"] = res.reference_energy_drift
    path = _default_out(cfg, f"convergence-{cfg.system}")
    write_csv(path, meta, ["kind", "method", "h", "GE_X", "GE_VU"], rows)
    for m, (sx, sv) in res.slopes.items():
        print(f"{m}: slope X {sx:.3f}, slope V/u {sv:.3f}")
    print(path)
    return EXIT_OK


def cmd_energy_drift(cfg: ExperimentConfig, threads: int) -> int:
    res = run_energy_drift(cfg, threads)
    rows = []
    for m, (times, rel) in res.series.items():
        rows.extend(["data", m, float(t), float(e)] for t, e in zip(times, rel))
    rows += [["max", m, None, v] for m, v in res.maxima.items()]
    rows += [["drift_slope", m, None, v] for m, v in res.slopes.items()]
    path = _default_out(cfg, f"energy-drift-{cfg.system}")
    write_csv(path, _meta(cfg, "energy-drift"), ["kind", "method", "time", "rel_energy_err"], rows)
    for m in res.series:
        print(f"{m}: max rel energy error {res.maxima[m]:.3e}, drift slope {res.slopes[m]:.3e}")
    print(path)
    return EXIT_OK


def cmd_bench(cfg: ExperimentConfig, threads: int) -> int:
    if threads > 1:
        print("bench runs serially; ignoring --threads", file=sys.stderr)
    times = run_bench(cfg)
    n = cfg.steps_for(cfg.h)
    rows = [[m, cfg.h, n, times[m]] for m in cfg.methods]
    path = _default_out(cfg, f"bench-{cfg.system}")
    write_csv(path, _meta(cfg, "bench"), ["method", "h", "n_steps", "median_seconds"], rows)
    for m in cfg.methods:
        print(f"{m}: {times[m]:.4f} s")
    print(path)
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, threads: int) -> int:
    results = run_verify(cfg)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {r.value:.3e}  (tol {r.tolerance:.0e})  {r.status}")
    if cfg.out:
        write_csv(cfg.out, _meta(cfg, "verify"), ["check", "value", "tolerance", "status"],
                  [[r.name, float(r.value), r.tolerance, r.status] for r in results])
    failed = [r.name for r in results if r.failed]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return EXIT_VERIFY
    print("all checks passed")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "convergence": cmd_convergence, "energy-drift": cmd_energy_drift,
            "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return COMMANDS[args.command](cfg, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationAborted as exc:
        print(f"numerical failure at step {exc.step}: {exc.cause}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TimingConflict as exc:
        print(f"timing refused: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PoissonIntError, ArithmeticError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
