"""
Command-line entry point: ``hartree-lab <subcommand> [options]``.

Subcommands
    simulate   evolve the configured data and write a diagnostics CSV
    verify     run the exact-identity suite and print a pass/fail table
    sweep      N-sweep of modified-energy increments and commutator norms
    morawetz   interaction Morawetz time series for the configured run
    report     merge CSVs into one long-format table and render figures

Exit codes: 0 success, 1 validation failure, 2 numerical abort, 3 verify failure.
The FFT thread count comes from ``--threads`` or the HARTREE_LAB_THREADS
environment variable (default 1).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft
from scipy.integrate import cumulative_trapezoid

from .config import ConfigError, RunConfig, load_config
from .dynamics import EvolveConfig, NumericalAbort, evolve
from .experiments import initial_data, sweep_almost_conservation
from .functionals import (
    energy,
    i_commutator,
    interaction_morawetz_action,
    mass,
    modified_energy,
    morawetz_l4,
    sobolev_norm,
)
from .grid import Field, save_snapshot
from .records import (
    MORAWETZ_COLUMNS,
    REPORT_COLUMNS,
    to_long,
    write_csv,
    write_manifest,
    write_series_csv,
    write_sweep_csv,
)

log = logging.getLogger("hartree_lab")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ABORT = 2
EXIT_VERIFY = 3

THREADS_ENV = "HARTREE_LAB_THREADS"


def make_probes(cfg: RunConfig) -> list[tuple[str, Callable[[Field], float]]]:
    mp, p = cfg.model, cfg.iparams
    table: dict[str, Callable[[Field], float]] = {
        "mass": mass,
        "energy": lambda u: energy(u, mp),
        "modified_energy": lambda u: modified_energy(u, p, mp),
        "hs_norm": lambda u: sobolev_norm(u, cfg.hs),
        "h1_norm": lambda u: sobolev_norm(u, 1.0),
        "morawetz_action": interaction_morawetz_action,
        "commutator": lambda u: i_commutator(u, p, mp, derivative=True),
    }
    return [(name, table[name]) for name in cfg.probes]


def _out_dir(cfg: RunConfig | None, args: argparse.Namespace) -> Path:
    if args.out:
        return Path(args.out)
    return Path(cfg.output["dir"]) if cfg else Path("out")


def _prefix(cfg: RunConfig | None) -> str:
    return str(cfg.output["prefix"]) if cfg else "run"


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    ev = cfg.evolve
    if ev.checkpoint_every:
        ev = EvolveConfig(ev.dt, ev.T, ev.sample_every, ev.integrator, ev.checkpoint_every, str(out / "checkpoints"))
    u0 = initial_data(cfg.grid, cfg.initial)
    write_manifest(out / f"{_prefix(cfg)}_manifest.json", "simulate", cfg.to_dict(), cfg.seed)
    res = evolve(u0, ev, cfg.model, make_probes(cfg))
    path = out / f"{_prefix(cfg)}_diagnostics.csv"
    write_series_csv(path, res.series)
    if cfg.output.get("snapshot"):
        save_snapshot(out / f"{_prefix(cfg)}_final.bin", res.state)
    print(f"wrote {path} ({len(res.series)} rows)")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from .verify import format_table, run_suite

    kwargs = {}
    if args.config:
        cfg = load_config(args.config)
        kwargs = dict(d=cfg.model.d, gamma=cfg.model.gamma, s=cfg.iparams.s, N=cfg.iparams.N, seed=cfg.seed)
    t0 = time.perf_counter()
    checks = run_suite(include_six_linear=not args.quick, **kwargs)
    print(format_table(checks))
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed in {time.perf_counter() - t0:.1f} s")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.N:
        cfg = _with_N_list(cfg, args.N)
    spec = cfg.sweep_spec()
    out = _out_dir(cfg, args)
    write_manifest(out / f"{_prefix(cfg)}_sweep_manifest.json", "sweep", cfg.to_dict(), cfg.seed)
    result = sweep_almost_conservation(spec)
    path = out / f"{_prefix(cfg)}_sweep.csv"
    write_sweep_csv(path, result, cfg.model.gamma, cfg.sweep["K"], cfg.sweep["mu"])
    print(f"wrote {path}")
    if result.slope_energy is not None:
        print(f"slope sup|dE~| vs N: {result.slope_energy:.3f}; slope commutator vs N: {result.slope_commutator:.3f}")
    if any(not r.valid for r in result.rows):
        print("some sweep rows aborted", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def _with_N_list(cfg: RunConfig, Ns: Sequence[float]) -> RunConfig:
    from dataclasses import replace

    sweep = dict(cfg.sweep)
    sweep["N_list"] = list(Ns)
    new = replace(cfg, sweep=sweep)
    new.sweep_spec()  # validates the override
    return new


def cmd_morawetz(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if cfg.model.d < 3:
        raise ConfigError([f"the morawetz subcommand needs d >= 3, got d = {cfg.model.d}"])
    out = _out_dir(cfg, args)
    u0 = initial_data(cfg.grid, cfg.initial)
    write_manifest(out / f"{_prefix(cfg)}_morawetz_manifest.json", "morawetz", cfg.to_dict(), cfg.seed)
    res = evolve(u0, cfg.evolve, cfg.model, keep_snapshots=True)
    ts = np.array([t for t, _ in res.snapshots])
    action = [interaction_morawetz_action(u) for _, u in res.snapshots]
    l4 = np.array([morawetz_l4(u, cfg.iparams, cfg.model) for _, u in res.snapshots])
    lhs = cumulative_trapezoid(l4, ts, initial=0.0) if len(ts) > 1 else np.zeros(1)
    path = out / f"{_prefix(cfg)}_morawetz.csv"
    write_csv(path, MORAWETZ_COLUMNS, zip(ts, action, l4, lhs))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    from .plots import render

    rows = []
    for path in args.inputs:
        rows += to_long(path)
    out = Path(args.out or "report")
    table = out / "report.csv"
    write_csv(table, REPORT_COLUMNS, rows)
    figures = render(rows, out)
    print(f"wrote {table} ({len(rows)} rows) and {len(figures)} figure(s)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hartree-lab", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument("--threads", type=int, default=None, help=f"FFT worker threads (default ${THREADS_ENV} or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="evolve and write a diagnostics CSV")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the exact-identity suite")
    p.add_argument("--config", help="take d, gamma, N, s and seed from this file")
    p.add_argument("--quick", action="store_true", help="skip the six-linear brute-force oracle")
    p.set_defaults(func=cmd_verify, out=None)

    p = sub.add_parser("sweep", help="N-sweep of almost conservation and commutator decay")
    p.add_argument("config")
    p.add_argument("--N", type=float, nargs="+", help="override [sweep] N_list")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("morawetz", help="interaction Morawetz time series")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.set_defaults(func=cmd_morawetz)

    p = sub.add_parser("report", help="merge CSVs into a long table and render figures")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", help="output directory (default ./report)")
    p.set_defaults(func=cmd_report)
    return parser


def _threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_subcommand(name: str, argv: Sequence[str] = ()) -> int:
    """Run ``hartree-lab <name> <argv...>`` in-process and return the exit status."""
    return main([name, *argv])


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        with sfft.set_workers(_threads(args)):
            return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
