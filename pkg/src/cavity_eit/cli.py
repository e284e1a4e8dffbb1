"""``cavity-eit`` command-line entry point.

Every command reads an optional configuration file, writes its tables into
the output directory and a ``summary.json`` record holding the full resolved
configuration, so ``--config out/summary.json`` reproduces the run.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .dynamics import run_sequence
from .experiments import (
    compare_modes,
    optimize_amplitude,
    peak_row,
    refine_peak,
    sweep_dimensions,
    sweep_radius,
)
from .integrate import IntegrationError
from .io import (
    result_summary,
    write_record,
    write_shell_csv,
    write_sweep_csv,
    write_timeseries_csv,
)
from .validation import run_all

log = logging.getLogger("cavity_eit")


class CommandFailed(RuntimeError):
    """A command ran but did not complete everything it was asked to."""


def _record(args, cfg: RunConfig, **results) -> dict:
    return {"command": args.command, "version": __version__, "config": cfg.to_dict(), **results}


def _radii(cfg: RunConfig, ratios):
    return [r * cfg.probe.waist_um * 1e-6 for r in ratios]


def _sweep_status(rows):
    bad = [r for r in rows if r.status.startswith("error")]
    if bad:
        raise CommandFailed(f"{len(bad)} of {len(rows)} sweep points failed; see status column")


def cmd_simulate(args, cfg: RunConfig, out: Path) -> None:
    res = run_sequence(cfg.to_simulation())
    write_timeseries_csv(res, out / "timeseries.csv")
    write_shell_csv(res, out / "shells.csv")
    write_record(_record(args, cfg, results=result_summary(res)), out / "summary.json")
    print(f"eta_w = {res.eta_w:.6f}  eta_r = {res.eta_r:.6f}  eta_tot = {res.eta_tot:.6f}")


def cmd_optimize(args, cfg: RunConfig, out: Path) -> None:
    sim = cfg.to_simulation()
    opt = optimize_amplitude(sim, cfg.sweep.A_bounds, cfg.sweep.tol_A)
    res = opt.result
    write_timeseries_csv(res, out / "timeseries.csv")
    write_shell_csv(res, out / "shells.csv")
    results = {"A_opt": opt.A_opt, "n_evaluations": opt.n_evaluations,
               "at_bound": opt.at_bound, **result_summary(res)}
    write_record(_record(args, cfg, results=results), out / "summary.json")
    print(f"A_opt = {opt.A_opt:.4f}  eta_w = {res.eta_w:.6f}  eta_r = {res.eta_r:.6f}  "
          f"eta_tot = {res.eta_tot:.6f}")


def cmd_sweep_radius(args, cfg: RunConfig, out: Path) -> None:
    sim = cfg.to_simulation()
    R = _radii(cfg, cfg.sweep.radius_ratios)
    opts = dict(A_bounds=cfg.sweep.A_bounds, tol_A=cfg.sweep.tol_A, workers=args.workers)
    if args.all_modes:
        tables = compare_modes(sim, R, **opts)
        rows = [r for key in tables for r in tables[key]]
    else:
        rows = sweep_radius(sim, R, **opts)
        tables = {(rows[0].mode, rows[0].config): rows}
    write_sweep_csv(rows, out / "radius_sweep.csv")
    peaks = {}
    for (mode, kind), table in tables.items():
        try:
            best = peak_row(table)
        except ValueError:
            continue
        peaks[f"{mode}_{kind}"] = {"R_um": best.R_um, "R_refined_um": refine_peak(table),
                                   "eta_tot": best.eta_tot, "A_opt": best.A_opt}
        print(f"{mode:6s} {kind:8s} peak R = {best.R_um:.2f} um  eta_tot = {best.eta_tot:.6f}  "
              f"A_opt = {best.A_opt:.3f}")
    write_record(_record(args, cfg, peaks=peaks), out / "summary.json")
    _sweep_status(rows)


def cmd_sweep_grid(args, cfg: RunConfig, out: Path) -> None:
    sim = cfg.to_simulation()
    L = [x * 1e-3 for x in cfg.sweep.length_mm]
    R = _radii(cfg, cfg.sweep.grid_radius_ratios)
    opts = dict(A_bounds=cfg.sweep.A_bounds, tol_A=cfg.sweep.tol_A, workers=args.workers)
    rows = sweep_dimensions(sim, L, R, **opts)
    write_sweep_csv(rows, out / "grid_sweep.csv")
    write_record(_record(args, cfg, n_points=len(rows)), out / "summary.json")
    print(f"{len(rows)} grid points written to {out / 'grid_sweep.csv'}")
    _sweep_status(rows)


def cmd_density(args, cfg: RunConfig, out: Path) -> None:
    sim = cfg.to_simulation()
    entries = {}
    for ratio, R in zip(cfg.sweep.density_radius_ratios, _radii(cfg, cfg.sweep.density_radius_ratios)):
        opt = optimize_amplitude(sim.with_radius(R), cfg.sweep.A_bounds, cfg.sweep.tol_A)
        name = f"density_R{ratio:g}wp.csv"
        write_shell_csv(opt.result, out / name, probe=sim.probe)
        entries[name] = {"radius_ratio": ratio, "R_um": R * 1e6, "A_opt": opt.A_opt,
                         "eta_w": opt.result.eta_w, "eta_tot": opt.result.eta_tot}
        print(f"R = {ratio:g} w_p: A_opt = {opt.A_opt:.3f}  eta_w = {opt.result.eta_w:.6f} -> {name}")
    write_record(_record(args, cfg, files=entries), out / "summary.json")


def cmd_validate(args, cfg: RunConfig, out: Path) -> None:
    checks = run_all(cfg.to_simulation())
    for c in checks:
        print(c.line())
    suites = {c.name: {"passed": c.passed, "value": c.value, "threshold": c.threshold,
                       "detail": c.detail} for c in checks}
    write_record(_record(args, cfg, suites=suites), out / "summary.json")
    failed = [c.name for c in checks if not c.passed]
    if failed:
        raise CommandFailed(f"validation failed: {', '.join(failed)}")


COMMANDS = {
    "simulate": (cmd_simulate, "run one write-store-read sequence"),
    "optimize": (cmd_optimize, "optimise the control amplitude A"),
    "sweep-radius": (cmd_sweep_radius, "optimised efficiency versus crystal radius"),
    "sweep-grid": (cmd_sweep_grid, "optimised efficiency over crystal length and radius"),
    "density": (cmd_density, "radial spin-excitation profiles after writing"),
    "validate": (cmd_validate, "run the invariant self-checks"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or JSON configuration (or a summary.json)")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seedless", action="store_true",
                        help="accepted for interface compatibility; nothing here is random")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cavity-eit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "sweep-radius":
            p.add_argument("--all-modes", action="store_true",
                           help="sweep TEM00 and LG01 with extended and mode-matched control")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config is not None else RunConfig.from_dict({})
    except ConfigError as exc:
        print(f"cavity-eit: config error: {exc}", file=sys.stderr)
        return 2
    out = args.out if args.out is not None else Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    func = COMMANDS[args.command][0]
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            func(args, cfg, out)
    except CommandFailed as exc:
        print(f"cavity-eit {args.command}: {exc}", file=sys.stderr)
        return 1
    except (IntegrationError, ValueError, ArithmeticError) as exc:
        print(f"cavity-eit {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
