"""Command line: ``mullins-sekerka {run,check,decay-test,scaling-test} [CONFIG]``.

Exit statuses: 0 success, 1 invalid input or configuration, 2 numerical
failure (including a failed check), 3 I/O error.  Failures also emit one JSON
record on stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
from importlib import metadata

import numpy as np
import scipy

from . import __version__
from .config import SimulationConfig, config_to_dict, load_config, serialize_config
from .errors import (ConfigurationError, InvalidArgument, InvalidData, MullinsSekerkaError,
                     NumericalFailure, RefuseStep, ResourceLimit)
from .evolution import Diagnostics, run_simulation

log = logging.getLogger("mullins_sekerka")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
FLOAT_FMT = "%.16e"

SNAPSHOT_HEADER = ("x[length]", "f[length]")
DIAGNOSTIC_UNITS = {
    "mass": "length^2",
    "energy": "length",
    "max_slope": "1",
    "linf": "length",
    "spectral_tail": "1",
}


class CheckFailed(MullinsSekerkaError):
    """A verification subcommand measured a value outside its tolerance."""


# -- output --------------------------------------------------------------------

def _fmt(v: float) -> str:
    return FLOAT_FMT % v


def write_snapshot_csv(path: str, state) -> None:
    x = state.f.grid.nodes
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_HEADER)
        for xi, fi in zip(x, state.f.values):
            w.writerow((_fmt(xi), _fmt(fi)))


def write_diagnostics_csv(path: str, history) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t[time]"] + [f"{k}[{DIAGNOSTIC_UNITS[k]}]" for k in Diagnostics.FIELDS])
        for t, d in history:
            w.writerow([_fmt(t)] + [_fmt(v) for v in d.as_tuple()])


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = __version__
    return {"mullins_sekerka": pkg, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def config_hash(cfg: SimulationConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


def write_outputs(cfg: SimulationConfig, traj, directory: str) -> dict:
    """Write the run artifacts and return the manifest."""
    os.makedirs(directory, exist_ok=True)
    files = []
    if "csv" in cfg.output.formats:
        for s in traj.snapshots:
            name = f"snapshot_{s.step_index:07d}.csv"
            write_snapshot_csv(os.path.join(directory, name), s)
            files.append(name)
        write_diagnostics_csv(os.path.join(directory, "diagnostics.csv"), traj.history)
        files.append("diagnostics.csv")
    if "json" in cfg.output.formats:
        data = {
            "units": {"x": "length", "f": "length", "t": "time"},
            "x": [float(v) for v in traj.snapshots[0].f.grid.nodes],
            "snapshots": [{"t": s.t, "step": s.step_index, "f": [float(v) for v in s.f.values]}
                          for s in traj.snapshots],
        }
        with open(os.path.join(directory, "snapshots.json"), "w", encoding="utf-8") as fh:
            json.dump(data, fh, sort_keys=True)
        files.append("snapshots.json")
    final = traj.final
    manifest = {
        "config": config_to_dict(cfg),
        "config_hash": config_hash(cfg),
        "versions": _versions(),
        "stop_reason": traj.stop_reason,
        "failure": traj.failure,
        "steps": final.step_index,
        "t_final": final.t,
        "files": files,
    }
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# -- subcommands ---------------------------------------------------------------

def _load(args) -> SimulationConfig:
    cfg = load_config(args.config) if args.config else SimulationConfig()
    over = {}
    if args.snapshot_every is not None:
        over["stepping"] = {"snapshot_every": args.snapshot_every}
    if args.output_dir is not None:
        over["output"] = {"directory": args.output_dir}
    if args.seed is not None:
        over["seed"] = args.seed
    return cfg.with_overrides(**over) if over else cfg


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def command_run(args) -> int:
    cfg = _load(args)
    traj = run_simulation(cfg)
    manifest = write_outputs(cfg, traj, cfg.output.directory)
    _say(args, f"stop reason: {traj.stop_reason}; t = {traj.final.t:.6g} after "
               f"{traj.final.step_index} steps; wrote {len(manifest['files']) + 1} files "
               f"to {cfg.output.directory}")
    if traj.failure is not None:
        raise NumericalFailure(f"{traj.failure['kind']}: {traj.failure['message']}")
    return EXIT_OK


def command_check(args) -> int:
    from .experiments import run_identity_checks

    seed = args.seed if args.seed is not None else (_load(args).seed if args.config else 0)
    results = run_identity_checks(seed)
    for r in results:
        _say(args, r.row())
    failed = [r.name for r in results if not r.passed]
    _say(args, f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        raise CheckFailed("failed checks: " + ", ".join(failed))
    return EXIT_OK


def command_decay_test(args) -> int:
    from .experiments import DECAY_TOL, decay_config, decay_experiment

    base = _load(args) if args.config else None
    failed = []
    for k in args.modes:
        if base is None:
            cfg = decay_config(k)
        else:
            cfg = decay_config(k, n=base.grid.n, dt=base.stepping.dt, L=base.grid.L,
                               amplitude=base.initial.amplitude)
        r = decay_experiment(k, cfg)
        status = "PASS" if r.passed else "FAIL"
        _say(args, f"{status}  k = {k:g}: rate {r.measured_rate:.6f}, expected {r.expected_rate:.6f}, "
                   f"relative error {r.relative_error:.2e} (tol {DECAY_TOL:.0e})")
        if not r.passed:
            failed.append(k)
    if failed:
        raise CheckFailed(f"decay rate outside tolerance for k = {failed}")
    return EXIT_OK


def command_scaling_test(args) -> int:
    from .experiments import SCALING_TOL, scaling_experiment

    kw = {"lam": args.lam, "t": args.time}
    if args.config:
        cfg = _load(args)
        kw.update(n=cfg.grid.n, L=cfg.grid.L, dt=cfg.stepping.dt, amplitude=cfg.initial.amplitude)
    r = scaling_experiment(**kw)
    status = "PASS" if r.passed else "FAIL"
    _say(args, f"{status}  lambda = {r.lam:g}, t = {r.t:g}: max defect {r.defect:.3e}, "
               f"relative {r.relative_defect:.3e} (tol {SCALING_TOL:.0e})")
    if not r.passed:
        raise CheckFailed("scaling defect outside tolerance")
    return EXIT_OK


COMMANDS = {
    "run": command_run,
    "check": command_check,
    "decay-test": command_decay_test,
    "scaling-test": command_scaling_test,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mullins-sekerka",
                                     description="Boundary-integral solver for Mullins-Sekerka flow of a graph.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?" if name != "run" else None,
                       help="TOML configuration file")
        p.add_argument("--output-dir")
        p.add_argument("--snapshot-every", type=int)
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--seed", type=int)
        if name == "decay-test":
            p.add_argument("--modes", type=float, nargs="+", default=[1.0, 2.0])
        if name == "scaling-test":
            p.add_argument("--lam", type=float, default=2.0)
            p.add_argument("--time", type=float, default=0.05)
    return parser


def _error_record(kind: str, exc: BaseException, status: int) -> None:
    record = {"error": kind, "message": str(exc), "exit_status": status}
    for attr in ("node", "condition", "residual"):
        v = getattr(exc, attr, None)
        if v is not None:
            record[attr] = v if np.isfinite(v) else str(v)
    errors = getattr(exc, "errors", None)
    if errors:
        record["errors"] = list(errors)
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, InvalidArgument, InvalidData, ResourceLimit) as exc:
        _error_record(type(exc).__name__, exc, EXIT_VALIDATION)
        return EXIT_VALIDATION
    except (NumericalFailure, RefuseStep, CheckFailed, ArithmeticError) as exc:
        _error_record(type(exc).__name__, exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL
    except OSError as exc:
        _error_record(type(exc).__name__, exc, EXIT_IO)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
