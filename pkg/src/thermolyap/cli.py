"""Command-line front end.

Subcommands
-----------
eval         snapshot + config -> functional report JSON (v_meq; with
             --steady also v_neq and the relative energy)
multipliers  config -> closed-form and numeric multipliers JSON
verify       config -> seeded property suites; nonzero exit on failure
simulate     config -> time-series CSV, optional final snapshot and figures
version      print the package version

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .checks import run_verification
from .config import load_config
from .eos import calibrate
from .errors import ConfigError, FormatError, ThermolyapError
from .fields import read_snapshot, write_snapshot
from .functionals import SteadyReference, feireisl_relative_energy, \
    multipliers_closed_form, multipliers_numeric, v_meq, v_neq
from .simulator import run_simulation, write_timeseries

__all__ = ["main", "dispatch"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermolyap",
        description="Lyapunov-type functionals for compressible "
                    "heat-conducting fluids")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate functionals on a snapshot")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--snapshot", required=True)
    p_eval.add_argument("--steady", help="steady reference snapshot for v_neq")
    p_eval.add_argument("--out", help="write JSON here instead of stdout")

    p_mult = sub.add_parser("multipliers", help="closed-form and numeric "
                                                "Lagrange multipliers")
    p_mult.add_argument("--config", required=True)
    p_mult.add_argument("--out")

    p_verify = sub.add_parser("verify", help="run the property suites")
    p_verify.add_argument("--config", required=True)

    p_sim = sub.add_parser("simulate", help="run a decay simulation")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True, help="time-series CSV path")
    p_sim.add_argument("--snapshot", help="write the final state here")
    p_sim.add_argument("--figures", nargs="?", const="",
                       help="render figures, by default next to --out "
                            "(pass DIR to choose another directory)")

    sub.add_parser("version", help="print the version")
    return parser


def _write_json(payload: dict, out_path) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_eval(args) -> int:
    cfg = load_config(args.config)
    eos = cfg.eos()
    ref = cfg.reference()
    cal = calibrate(eos, ref.state())
    grid, w = read_snapshot(args.snapshot)
    payload = {"v_meq": v_meq(cal, ref, grid, w).as_dict()}
    if args.steady:
        sgrid, steady = read_snapshot(args.steady)
        if sgrid != grid:
            raise ConfigError("steady snapshot grid differs from state grid")
        payload["v_neq"] = v_neq(cal, SteadyReference(steady), grid, w).as_dict()
        payload["feireisl_relative_energy"] = feireisl_relative_energy(
            cal, grid, w, steady)
    _write_json(payload, args.out)
    return 0


def _cmd_multipliers(args) -> int:
    cfg = load_config(args.config)
    eos = cfg.eos()
    ref = cfg.reference()
    cal = calibrate(eos, ref.state())
    closed = multipliers_closed_form(cal, ref)
    numeric = multipliers_numeric(cal, ref, cfg.grid())
    payload = {
        "closed_form": {"lambda1": closed.lambda1, "lambda2": closed.lambda2},
        "numeric": {"lambda1": numeric.lambda1, "lambda2": numeric.lambda2},
    }
    _write_json(payload, args.out)
    return 0


def _cmd_verify(args) -> int:
    cfg = load_config(args.config)
    results = run_verification(cfg.eos(), cfg.reference(), cfg.grid(),
                               seed=cfg["verify.seed"],
                               samples=cfg["verify.samples"])
    failed = False
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: worst={r.worst:.3e} ({r.detail})")
        failed = failed or not r.passed
    return 1 if failed else 0


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    result = run_simulation(cfg.sim())
    write_timeseries(args.out, result.records)
    if args.snapshot:
        write_snapshot(args.snapshot, cfg.grid(), result.final_state)
    if args.figures is not None:
        import os
        from .report import render_decay_figure, render_snapshot_figure
        fig_dir = args.figures or os.path.dirname(os.path.abspath(args.out))
        os.makedirs(fig_dir, exist_ok=True)
        render_decay_figure(result.records,
                            os.path.join(fig_dir, "decay.png"))
        render_snapshot_figure(cfg.grid(), result.final_state,
                               os.path.join(fig_dir, "final_state.png"),
                               title="final state")
    return 0


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "multipliers":
            return _cmd_multipliers(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "version":
            print(__version__)
            return 0
        parser.error(f"unknown command {args.command}")
        return 2
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ThermolyapError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
