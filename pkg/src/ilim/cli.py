"""Command-line entry points.

Subcommands: simulate (one paired run), sweep (viscosity sweep + report),
criteria (evaluate stored snapshot trajectories), corrector-check
(scaling report), shear-verify (exact-series oracle suite).

Exit codes: 0 success, 1 usage/validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .correctors import verify_corrector_scalings
from .criteria import LayerSpec, MSchedule, evaluate_criteria
from .harness import (
    SweepConfig,
    emit_report,
    emit_shear_report,
    parse_config,
    run_sweep,
    shear_limit_study,
)
from .snapshots import load_trajectory, save_trajectory
from .solvers import run_simulation

__all__ = ["cli_dispatch", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of calling sys.exit(2)."""

    def error(self, message):
        raise _UsageError(f"{self.format_usage()}error: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="ilim", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add_schedule_flags(p):
        p.add_argument("--M-form", dest="m_form", choices=("constant", "power"),
                       help="viscosity schedule M_nu(t): constant or c*nu^a")
        p.add_argument("--M-c", dest="m_c", type=float, help="schedule constant c")
        p.add_argument("--M-a", dest="m_a", type=float, help="schedule power a")

    def add_layer_flags(p):
        p.add_argument("--C", type=float, help="layer constant C > 1")
        p.add_argument("--r", help="condition norm index (>=1 or 'inf')")
        p.add_argument("--use-du1dy", action="store_true", default=None,
                       help="use -d(u1)/dy instead of full vorticity")

    def add_run_flags(p):
        p.add_argument("--config", metavar="FILE", help="INI config file")
        p.add_argument("--nu", help="viscosity (comma list for sweeps)")
        p.add_argument("--nx", type=int, help="streamwise points")
        p.add_argument("--ny", type=int, help="wall-normal points")
        p.add_argument("--T", dest="t_final", type=float, help="final time")
        p.add_argument("--dt", type=float, help="time step")
        p.add_argument("--preset", help="initial data preset name")

    p_sim = sub.add_parser("simulate", help="one paired NS/Euler run")
    add_run_flags(p_sim)
    p_sim.add_argument("--out", metavar="DIR",
                       help="write ns/ and euler/ snapshot trajectories here")

    p_sweep = sub.add_parser("sweep", help="viscosity sweep with report")
    add_run_flags(p_sweep)
    add_schedule_flags(p_sweep)
    add_layer_flags(p_sweep)
    p_sweep.add_argument("--jobs", type=int, help="worker processes")
    p_sweep.add_argument("--out", metavar="DIR", default="report",
                         help="report directory (default: report)")

    p_crit = sub.add_parser("criteria",
                            help="evaluate criteria on stored snapshots")
    p_crit.add_argument("snapshots", metavar="DIR",
                        help="directory containing ns/ and euler/ trajectories")
    add_schedule_flags(p_crit)
    add_layer_flags(p_crit)
    p_crit.add_argument("--out", metavar="FILE",
                        help="criteria CSV path (default: DIR/criteria.csv)")

    p_corr = sub.add_parser("corrector-check",
                            help="corrector norm-scaling report")
    p_corr.add_argument("--p", default="1,2,inf",
                        help="comma list of norm indices (default 1,2,inf)")
    p_corr.add_argument("--samples", type=int, default=9,
                        help="number of alpha*tau samples")
    p_corr.add_argument("--min", dest="at_min", type=float, default=1e-4)
    p_corr.add_argument("--max", dest="at_max", type=float, default=1e-1)
    p_corr.add_argument("--out", metavar="DIR", default="corrector-report",
                        help="report directory")

    p_shear = sub.add_parser("shear-verify",
                             help="exact shear-series inviscid-limit study")
    p_shear.add_argument("--nu", default="1e-2,1e-3,1e-4,1e-5",
                         help="comma list of viscosities")
    p_shear.add_argument("--T", dest="t_final", type=float, default=1.0)
    p_shear.add_argument("--ny", type=int, default=193)
    add_schedule_flags(p_shear)
    add_layer_flags(p_shear)
    p_shear.add_argument("--out", metavar="DIR", default="shear-report",
                         help="report directory")
    return parser


def _parse_r(text: str) -> float:
    if str(text).strip().lower() in ("inf", "infinity"):
        return np.inf
    r = float(text)
    if r < 1.0:
        raise ValueError("r must be >= 1 or 'inf'")
    return r


def _parse_nu_list(text: str) -> tuple:
    vals = tuple(float(v) for v in text.replace(",", " ").split())
    if not vals:
        raise ValueError("empty nu list")
    return vals


def _load_config(args, require: bool) -> SweepConfig:
    if args.config is not None:
        cfg = parse_config(args.config)
    elif require:
        raise _UsageError(
            "usage: ilim sweep --config FILE [overrides]\n"
            "error: sweep requires --config"
        )
    else:
        cfg = SweepConfig()
    for attr in ("nx", "ny", "t_final", "dt", "preset"):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, attr, val)
    if getattr(args, "nu", None) is not None:
        cfg.nu_values = _parse_nu_list(args.nu)
    for attr, name in (("m_form", "m_form"), ("m_c", "m_c"), ("m_a", "m_a"),
                       ("C", "layer_c"), ("use_du1dy", "use_du1dy")):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "r", None) is not None:
        cfg.r = _parse_r(args.r)
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _load_config(args, require=False)
    sim = cfg.simulation_config(cfg.nu_values[0])
    pair = run_simulation(sim)
    from .analysis import error_series

    series = error_series(pair.ns, pair.euler)
    print(f"paired run: nu={sim.nu!r} t_final={sim.t_final!r} "
          f"grid={sim.nx}x{sim.ny}")
    print(f"final time {pair.ns.states[-1].t!r}: "
          f"sup |u - ubar|_L2^2 = {series.sup_value!r}")
    if args.out is not None:
        out = Path(args.out)
        save_trajectory(pair.ns, out / "ns")
        save_trajectory(pair.euler, out / "euler")
        print(f"wrote {out / 'ns'} and {out / 'euler'}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args, require=True)
    result = run_sweep(cfg, jobs=args.jobs)
    names = emit_report(result, args.out)
    for rec in result.records:
        if rec.ok:
            print(f"nu={rec.nu!r}: ok sup_error_sq={rec.sup_err_sq!r}")
        else:
            print(f"nu={rec.nu!r}: failed ({rec.message})")
    if result.fit is not None:
        print(f"fitted error exponent: {result.fit.exponent!r}")
    print(f"report: {len(names)} files in {args.out}")
    return 0


def _cmd_criteria(args) -> int:
    root = Path(args.snapshots)
    ns = load_trajectory(root / "ns")
    euler = load_trajectory(root / "euler")
    schedule = MSchedule(
        form=args.m_form or "power",
        c=args.m_c if args.m_c is not None else 1.0,
        a=args.m_a if args.m_a is not None else 0.5,
    )
    spec = LayerSpec(
        C=args.C if args.C is not None else 10.0,
        r=_parse_r(args.r) if args.r is not None else 2.0,
        use_du1dy=bool(args.use_du1dy),
    )
    report = evaluate_criteria(ns, euler, schedule, spec)
    out = Path(args.out) if args.out is not None else root / "criteria.csv"
    report.write_csv(out)
    print(f"criteria: {'pass' if report.all_pass else 'FAIL'} "
          f"({report.times.size} times, nu={report.nu!r})")
    print(f"wrote {out}")
    return 0


def _cmd_corrector_check(args) -> int:
    p_values = []
    for tok in args.p.replace(",", " ").split():
        p_values.append(np.inf if tok.strip().lower() == "inf" else float(tok))
    if not p_values:
        raise ValueError("empty p list")
    if args.samples < 3:
        raise ValueError("need at least 3 samples")
    if not (0.0 < args.at_min < args.at_max):
        raise ValueError("need 0 < min < max")
    at = np.geomspace(args.at_min, args.at_max, args.samples)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    worst = 0.0
    for p in p_values:
        report = verify_corrector_scalings(p, at)
        tag = "inf" if np.isinf(p) else f"{p:g}"
        path = out / f"scaling_p{tag}.csv"
        report.write_csv(path)
        dev = max(abs(row.fitted_exponent - row.expected_exponent)
                  for row in report.rows)
        worst = max(worst, dev)
        print(f"p={tag}: max |fit - expected| = {dev!r} -> {path}")
    print(f"worst deviation over p: {worst!r}")
    return 0


def _cmd_shear_verify(args) -> int:
    result = shear_limit_study(
        nu_values=_parse_nu_list(args.nu),
        t_final=args.t_final,
        ny=args.ny,
        schedule=MSchedule(
            form=args.m_form or "power",
            c=args.m_c if args.m_c is not None else 1.0,
            a=args.m_a if args.m_a is not None else 0.5,
        ),
        layer_c=args.C if args.C is not None else 10.0,
        r_values=(
            (_parse_r(args.r),) if args.r is not None else (1.0, 2.0, np.inf)
        ),
    )
    names = emit_shear_report(result, args.out)
    for i, nu in enumerate(result.nu_values):
        print(f"nu={nu!r}: sup_error_sq={float(result.sup_err_sq[i])!r}")
    if result.fit is not None:
        print(f"fitted error exponent: {result.fit.exponent!r}")
    for nu, ok in result.holdout_bound_ok.items():
        print(f"held-out bound nu={nu!r}: {'ok' if ok else 'VIOLATED'}")
    print(f"report: {len(names)} files in {args.out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "criteria": _cmd_criteria,
    "corrector-check": _cmd_corrector_check,
    "shear-verify": _cmd_shear_verify,
}


def cli_dispatch(argv) -> int:
    """Parse argv and run a subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    if args.command is None:
        print(parser.format_usage(), file=sys.stderr, end="")
        print("error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
