"""Command line: ``mega-bandits simulate | bounds | presets``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bounds as B
from .policies import MegaParams
from .report import write_csv, write_svg
from .runner import DEFAULT_STRIDE, run_scenario
from .scenarios import FIGURE_POLICIES, load_config, preset, preset_names, to_config


class UsageError(Exception):
    pass


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v < 1:
            raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
        return v
    return conv


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="mega-bandits", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write CSV (and SVG)")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="preset name (see `presets`)")
    src.add_argument("--config", type=Path, help="scenario config file")
    sim.add_argument("--horizon", type=_nonneg_int)
    sim.add_argument("--reps", type=_positive(int))
    sim.add_argument("--seed", type=_nonneg_int)
    sim.add_argument("--out", type=Path, default=Path("."), help="output directory")
    sim.add_argument("--stride", type=_positive(int), default=DEFAULT_STRIDE)
    sim.add_argument("--jobs", type=_positive(int), help="worker processes (default: $MEGA_BANDITS_JOBS or 1)")
    sim.add_argument("--emit-svg", action="store_true", help="also render <name>.svg")
    sim.add_argument("--overlay", action="store_true",
                     help="with a figure preset, also run its baseline variants and draw them together")

    bd = sub.add_parser("bounds", help="evaluate every closed-form bound")
    bd.add_argument("--K", type=int, required=True)
    bd.add_argument("--N", type=int, required=True)
    bd.add_argument("--t", type=int, required=True)
    bd.add_argument("--T", type=int, help="learning time; derived from eps-rank and delta if omitted")
    bd.add_argument("--eps-rank", type=float, default=0.1)
    bd.add_argument("--delta", type=float, default=0.1)
    defaults = MegaParams()
    for name in ("c", "d", "p0", "alpha", "beta"):
        bd.add_argument(f"--{name}", type=float, default=getattr(defaults, name))

    pr = sub.add_parser("presets", help="list presets")
    pr.add_argument("--show", metavar="NAME", help="print the preset as a config file")
    return ap


def _scenario(args, name=None):
    if name is not None:
        s = preset(name, horizon=args.horizon)
    elif args.config is not None:
        s = load_config(args.config)
        if args.horizon is not None:
            s = s.with_(horizon=args.horizon)
    else:
        s = preset(args.scenario, horizon=args.horizon)
    if args.reps is not None:
        s = s.with_(repetitions=args.reps)
    if args.seed is not None:
        s = s.with_(master_seed=args.seed)
    return s


def cmd_simulate(args, out=None):
    out = out or sys.stdout
    if args.overlay and args.scenario not in FIGURE_POLICIES:
        raise UsageError(f"--overlay needs one of {', '.join(FIGURE_POLICIES)}")
    names = FIGURE_POLICIES[args.scenario] if args.overlay else (None,)
    args.out.mkdir(parents=True, exist_ok=True)
    curves = {}
    first = None
    for name in names:
        s = _scenario(args, name)
        first = first or s
        res = run_scenario(s, jobs=args.jobs, stride=args.stride)
        path = args.out / f"{s.name}.csv"
        write_csv(res.aggregate, path)
        print(f"wrote {path} ({len(res.aggregate)} rows, {s.repetitions} repetitions)", file=out)
        curves[s.name] = res.aggregate
    if args.emit_svg:
        path = args.out / f"{first.name}.svg"
        if len(curves[first.name]) == 0:
            print("horizon 0: no SVG written", file=out)
        else:
            write_svg(curves if len(curves) > 1 else curves[first.name], path, title=first.name)
            print(f"wrote {path}", file=out)
    return 0


def cmd_bounds(args, out=None):
    out = out or sys.stdout
    params = MegaParams(args.c, args.d, args.p0, args.alpha, args.beta)
    inp = B.BoundInputs(K=args.K, N=args.N, t=args.t, params=params, T=args.T,
                        eps_rank=args.eps_rank, delta=args.delta)
    rows = B.bound_table(inp)
    width = max(len(r.name) for r in rows)
    for r in rows:
        val = "-" if r.value is None else f"{r.value:.10g}"
        note = f"  [{r.note}]" if r.note else ""
        print(f"{r.name:<{width}}  {val:>16}{note}", file=out)
    return 0


def cmd_presets(args, out=None):
    out = out or sys.stdout
    if args.show:
        print(to_config(preset(args.show)), end="", file=out)
        return 0
    for name in preset_names():
        s = preset(name)
        print(f"{name:<14} K={s.K:<3} users={len(s.schedule.users):<3} policy={s.policies[0]:<8} "
              f"reps={s.repetitions}", file=out)
    return 0


COMMANDS = {"simulate": cmd_simulate, "bounds": cmd_bounds, "presets": cmd_presets}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, KeyError, UsageError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"mega-bandits: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
