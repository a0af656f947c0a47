"""Command-line interface.

Subcommands:
  kle        write the eigenvalue spectrum and eigenfunction fields
  krige      write the kriged surface (CSV + PGM)
  condition  condition a theta vector and report the honoring error
  solve      run the pressure solver on a log-permeability field
  invert     run one MCMC study per the config's conditioned flag
  diagnose   PSRF/MPSRF series from existing trace CSVs
  reference  the full conditioned-vs-unconditioned comparative study

Every failure exits nonzero after printing one line starting with
``error:<module>:<code>``.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import study
from .conditioning import synthesize_conditioned
from .config import StudyConfig, parse_config
from .diagnostics import diagnostics_series, write_report_csv, write_report_dat
from .errors import CondflowError, ParseError
from .grid import read_field_csv, write_field_csv, write_field_pgm
from .kriging import snap_to_cells
from .mcmc import read_trace_csv
from .study import build_setup, resolve_output_dir, run_reference_experiment


def _load_config(path):
    if path is None:
        return StudyConfig()
    return parse_config(path)


def _out_dir(cfg, override):
    out = override or resolve_output_dir(cfg)
    os.makedirs(out, exist_ok=True)
    return out


def cmd_kle(args):
    cfg = _load_config(args.config)
    setup = build_setup(cfg)
    out = _out_dir(cfg, args.out_dir)
    basis = setup.bundle.basis
    with open(os.path.join(out, "eigenvalues.csv"), "w") as fh:
        for lam in basis.lambdas:
            fh.write(format(lam, ".17g") + "\n")
    for i in range(basis.n):
        write_field_csv(basis.eigenfield(i),
                        os.path.join(out, f"phi_{i + 1:03d}.csv"))
    print(f"retained {basis.n} modes, energy {basis.energy:.6f}")
    return 0


def cmd_krige(args):
    cfg = _load_config(args.config)
    setup = build_setup(cfg)
    out = _out_dir(cfg, args.out_dir)
    write_field_csv(setup.bundle.kriged, os.path.join(out, "kriged.csv"))
    write_field_pgm(setup.bundle.kriged, os.path.join(out, "kriged.pgm"))
    print(f"kriged surface written to {out}")
    return 0


def cmd_condition(args):
    cfg = _load_config(args.config)
    setup = build_setup(cfg)
    out = _out_dir(cfg, args.out_dir)
    theta = _read_theta(args.theta, setup.bundle.basis.n)
    fld = synthesize_conditioned(
        setup.bundle.basis, setup.bundle.kriged, theta, setup.bundle.projector
    )
    write_field_csv(fld, os.path.join(out, "conditioned.csv"))
    write_field_pgm(fld, os.path.join(out, "conditioned.pgm"))
    cells = snap_to_cells(setup.measurements, setup.bundle.fine)
    err = np.max(np.abs(fld.values[cells] - setup.measurements.values))
    print(f"max honoring error: {err:.3e}")
    return 0


def _read_theta(path, n):
    try:
        theta = np.loadtxt(path, ndmin=1)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}", module="cli") from exc
    if theta.size != n:
        raise ParseError(
            f"{path}: expected {n} theta values, got {theta.size}",
            module="cli",
        )
    return theta


def cmd_solve(args):
    cfg = _load_config(args.config)
    setup = build_setup(cfg)
    out = _out_dir(cfg, args.out_dir)
    field = (read_field_csv(args.field, setup.bundle.fine)
             if args.field else setup.reference_field)
    from .darcy import solve_pressure

    pressure = solve_pressure(field, setup.bundle.bc)
    write_field_csv(pressure, os.path.join(out, "pressure.csv"))
    write_field_pgm(pressure, os.path.join(out, "pressure.pgm"))
    print(f"pressure field written to {out}")
    return 0


def cmd_invert(args):
    cfg = _load_config(args.config)
    setup = build_setup(cfg)
    out = _out_dir(cfg, args.out_dir)
    study.run_one_study(setup, cfg.conditioned, out)
    return 0


def cmd_diagnose(args):
    traces = [read_trace_csv(p) for p in args.traces]
    kept = study.post_burn_in(traces, args.burn_in)
    length = kept[0].thetas.shape[0]
    report = diagnostics_series(
        kept, study.checkpoints_for(length, args.checkpoint_every)
    )
    write_report_csv(report, args.out)
    root, _ = os.path.splitext(args.out)
    write_report_dat(report, root + ".dat")
    for notice in report.notices:
        print(f"notice: {notice}")
    if report.mpsrf:
        print(f"final max PSRF {report.max_psrf[-1]:.4f}, "
              f"MPSRF {report.mpsrf[-1]:.4f}")
    return 0


def cmd_reference(args):
    cfg = _load_config(args.config)
    return run_reference_experiment(cfg, dry_run=args.dry_run)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="condflow",
        description="Measurement-conditioned Gaussian field sampling with "
                    "two-stage MCMC inversion of Darcy flow",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="study config file (key = value)")
        p.add_argument("--out-dir", help="output directory override")
        p.set_defaults(func=func)
        return p

    add("kle", cmd_kle, "write eigenvalues and eigenfunctions")
    add("krige", cmd_krige, "write the kriged surface")
    p = add("condition", cmd_condition, "condition a theta vector")
    p.add_argument("--theta", required=True,
                   help="CSV with one theta value per line")
    p = add("solve", cmd_solve, "solve the pressure equation")
    p.add_argument("--field", help="log-permeability CSV "
                                   "(default: reference field)")
    add("invert", cmd_invert, "run one MCMC study")
    p = add("reference", cmd_reference,
            "run the conditioned vs unconditioned comparison")
    p.add_argument("--dry-run", action="store_true",
                   help="write the manifest only")

    p = sub.add_parser("diagnose", help="PSRF/MPSRF from trace CSVs")
    p.add_argument("traces", nargs="+", help="trace CSV files (k >= 2)")
    p.add_argument("--out", required=True, help="diagnostics CSV to write")
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--checkpoint-every", type=int,
                   default=study.CHECKPOINT_EVERY)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CondflowError as exc:
        print(f"error:{exc.module}:{exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error:cli:io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
