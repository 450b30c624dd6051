"""Command-line front end: ``simulate``, ``sweep`` and ``envelope``.

The scenario comes from a ``key = value`` file given by ``--config`` or the
``CMPCWALK_CONFIG`` environment variable; flags override it. Exit codes:
0 completed, 2 fell, 1 configuration or usage error.
"""

import argparse
from dataclasses import replace
import os
import sys

import numpy as np

from . import config as cfgmod
from .gait import build_plan
from .lip import LipParams
from .sim import run, sweep_margin
from .surface import constant_kernel_integral, envelope_at, kernel_integral

ENV_CONFIG = "CMPCWALK_CONFIG"
EXIT_OK, EXIT_CONFIG, EXIT_FELL = 0, 1, 2


def _load_config(args):
    path = args.config or os.environ.get(ENV_CONFIG)
    if path:
        return cfgmod.load(path)
    return cfgmod.build_config({})


def _apply_flags(cfg, args):
    if getattr(args, "controller", None) in ("cmpc", "ismpc", "baseline"):
        cfg = replace(cfg, controller=cfgmod.CONTROLLER_ALIASES[args.controller])
    if getattr(args, "disturbance", None):
        cfg = cfgmod.with_disturbance(cfg, args.disturbance, args.seed, (args.file_x, args.file_y))
    elif getattr(args, "seed", None) is not None:
        raise cfgmod.ConfigError("--seed needs --disturbance random")
    return cfg


def _write(path, text):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _parse_times(spec):
    if spec in (None, "all"):
        return None
    try:
        return [float(s) for s in spec.split(",") if s.strip()]
    except ValueError:
        raise cfgmod.ConfigError(f"--dump-horizons: expected 'all' or comma-separated times, got {spec!r}")


def cmd_simulate(args) -> int:
    cfg = _apply_flags(_load_config(args), args)
    if args.print_config:
        sys.stdout.write(cfgmod.dump(cfg))
        return EXIT_OK
    os.makedirs(args.out, exist_ok=True)
    hook = None
    if args.dump_horizons is not None:
        times = _parse_times(args.dump_horizons)
        wanted = None if times is None else {round(t / cfg.dt) for t in times}
        hdir = os.path.join(args.out, "horizons")

        def hook(t_k, axis, dec, lo, hi):
            k = round(t_k / cfg.dt)
            if (wanted is None or k in wanted) and dec.optimal:
                _write(os.path.join(hdir, f"horizon_{k:04d}_{axis}.csv"), dec.horizon_table(lo, hi))

    res = run(cfg, on_decision=hook, record_timing=args.timing)
    _write(os.path.join(args.out, "trace.csv"), res.trace.to_csv())
    _write(os.path.join(args.out, "plan.csv"), build_plan(cfg.gait).to_table())
    if res.completed:
        print(f"completed: {len(res.trace.rows)} slices")
        return EXIT_OK
    print(f"fell at t={res.fall_time:.2f} s ({res.reason})")
    return EXIT_FELL


def _parse_range(spec):
    try:
        lo, hi = (float(s) for s in spec.split(":"))
    except ValueError:
        raise cfgmod.ConfigError(f"--range: expected lo:hi, got {spec!r}") from None
    if hi < lo:
        raise cfgmod.ConfigError(f"--range: lo must not exceed hi, got {spec!r}")
    return lo, hi


def cmd_sweep(args) -> int:
    base = _load_config(args)
    lo, hi = _parse_range(args.range)
    if args.resolution <= 0 or args.parallel < 1:
        raise cfgmod.ConfigError("--resolution must be positive and --parallel at least 1")
    kinds = ["cmpc", "ismpc"] if args.controller == "both" else [args.controller]
    for kind in kinds:
        cfg = replace(base, controller=cfgmod.CONTROLLER_ALIASES[kind])
        res = sweep_margin(cfg, args.axis, args.mode, args.fixed, lo, hi, args.resolution, args.parallel)
        if args.out:
            _write(os.path.join(args.out, f"sweep_{args.axis}_{args.mode}_{kind}.csv"), res.to_csv())
        unit = "m/s^2" if args.mode == "amplitude" else "Hz"
        if res.margin is None:
            print(f"{kind}: unbounded below (first probe {lo:g} fell)")
        elif res.unbounded == "above":
            print(f"{kind}: margin >= {res.margin:.4f} {unit} (top of range passed)")
        else:
            flag = "" if res.monotone else " [non-monotone]"
            print(f"{kind}: margin {res.margin:.4f} {unit} in [{res.interval[0]:.4f}, "
                  f"{res.interval[1]:.4f}]{flag}")
    return EXIT_OK


def envelope_table(cfg, axis, a0, samples=101):
    bounds = cfg.bounds(axis)
    env = envelope_at(a0, bounds, cfg.mpc.T_c)
    p: LipParams = cfg.lip
    b_low, b_up = kernel_integral(env, "lower", p), kernel_integral(env, "upper", p)
    tau = np.linspace(0.0, cfg.mpc.T_c, samples)
    lines = ["tau,lower,upper,T_l,T_u,b_low,b_up"]
    for t, lo, up in zip(tau, env.lower(tau), env.upper(tau)):
        lines.append(f"{t:.6f},{float(lo)!r},{float(up)!r},{env.T_l!r},{env.T_u!r},{b_low!r},{b_up!r}")
    return "\n".join(lines) + "\n", env, b_low, b_up


def cmd_envelope(args) -> int:
    cfg = _load_config(args)
    text, env, b_low, b_up = envelope_table(cfg, args.axis, args.accel)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    b_const = constant_kernel_integral(args.accel, cfg.mpc.T_c, cfg.lip)
    print(f"T_l={env.T_l:.4f} T_u={env.T_u:.4f} b_low={b_low:.6g} b_up={b_up:.6g} b_const={b_const:.6g}",
          file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmpcwalk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help=f"scenario file (default: ${ENV_CONFIG} or built-in defaults)")

    p = sub.add_parser("simulate", help="run one walk and write its trace")
    common(p)
    p.add_argument("--controller", choices=["cmpc", "ismpc"])
    p.add_argument("--disturbance", choices=list(cfgmod.DISTURBANCE_KINDS))
    p.add_argument("--seed", type=int)
    p.add_argument("--file-x", help="two-column time,accel file for --disturbance file")
    p.add_argument("--file-y")
    p.add_argument("--out", default="out")
    p.add_argument("--dump-horizons", nargs="?", const="all", metavar="TIMES",
                   help="write horizon tables, for all solves or at comma-separated times")
    p.add_argument("--timing", action="store_true", help="record solve times (breaks bit-identity)")
    p.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="stability margin by bisection")
    common(p)
    p.add_argument("--axis", choices=["x", "y"], required=True)
    p.add_argument("--mode", choices=["amplitude", "frequency"], required=True)
    p.add_argument("--fixed", type=float, required=True,
                   help="frequency in Hz (amplitude mode) or position amplitude in m (frequency mode)")
    p.add_argument("--range", required=True, metavar="LO:HI")
    p.add_argument("--resolution", type=float, default=0.01)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--controller", choices=["cmpc", "ismpc", "both"], default="both")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("envelope", help="sample the worst-case acceleration envelopes")
    common(p)
    p.add_argument("--accel", type=float, required=True)
    p.add_argument("--axis", choices=["x", "y"], default="x")
    p.add_argument("--out")
    p.set_defaults(func=cmd_envelope)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which is reserved for a fall here
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (cfgmod.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
