"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or configuration, 2 simulation
diverged, 3 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .config import OUTER_MODES, SimConfig, load_config, print_schema
from .dq import DqVector
from .errors import InvalidArgument, InvalidConfiguration, SimError
from .outputs import OutputError, write_outputs, write_pqmap
from .pqmap import pq_capability_map
from .scenarios import KINDS
from .simulate import convergence_report, identify, run_scenario

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("reactive_setpoint")


def _config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    changes = {}
    if getattr(args, "mode", None):
        changes["outer_mode"] = args.mode
    if getattr(args, "out", None):
        changes["out_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if changes:
        cfg = cfg.replace(**changes)
    sc = {}
    if getattr(args, "scenario", None):
        sc["kind"] = args.scenario
    if getattr(args, "assumption3", False):
        sc["assumption3_mode"] = True
    if getattr(args, "duration", None) is not None:
        sc["duration"] = args.duration
    if sc:
        cfg = cfg.with_scenario(**sc)
    return cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    res = run_scenario(cfg, hard_stop=args.hard_stop)
    conv = None
    if cfg.outer_mode == "ofo" and res.triggers:
        conv = convergence_report(res, cfg)
    paths = write_outputs(res.trace, res.metrics, cfg, plot=args.plot, convergence=conv)
    m = res.metrics
    print(f"{cfg.scenario.kind}/{cfg.outer_mode}: {m['rows']} rows, trip={m.get('trip_time')}, "
          f"max |m_raw|={m.get('max_m_raw_norm', float('nan')):.4f}, max i/i_max={m.get('max_i_ratio', float('nan')):.4f}")
    if conv is not None:
        print(f"convergence: {conv['verdict']} (recursion bound {conv['theorem1']['fraction']:.4f})")
    for kind, path in paths.items():
        print(f"  {kind}: {path}")
    if res.error is not None:
        print(f"error: simulation diverged: {res.error}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_pqmap(args) -> int:
    cfg = _config(args)
    lim = cfg.limits
    rows = pq_capability_map(lim, cfg.plant, cfg.v_dc_ref, DqVector(lim.v_g_nom, 0.0), args.points)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "pqmap.csv"
    write_pqmap(rows, path)
    gaps = sum(r.empty for r in rows)
    print(f"{len(rows)} points ({gaps} empty) -> {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_identify(args) -> int:
    from .oracle import estimate_inner_loop_constants

    cfg = _config(args)
    resp = identify(cfg, n_ticks=args.ticks)
    c = estimate_inner_loop_constants(resp, C3=cfg.ofo.C3)
    d = dataclasses.asdict(c)
    for k in ("C1", "C1_fit", "C2", "C3", "residual"):
        print(f"{k} = {d[k]:.6g}")
    print(f"C1*exp(-C2*m) = {c.C1 * 2.718281828459045 ** (-c.C2 * cfg.m):.4g} (m = {cfg.m})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reactive-setpoint", description=__doc__.splitlines()[0])
    ap.add_argument("--print-schema", action="store_true", help="print every config key with its default")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd")

    def common(p):
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="DIR")

    p = sub.add_parser("run", help="simulate one scenario")
    common(p)
    p.add_argument("--mode", choices=OUTER_MODES)
    p.add_argument("--scenario", choices=KINDS)
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float, help="override scenario duration [s]")
    p.add_argument("--plot", action="store_true", help="also write an SVG plot")
    p.add_argument("--assumption3", action="store_true", help="hold disturbances between OFO triggers")
    p.add_argument("--hard-stop", action="store_true", help="stop at the first trip")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("pqmap", help="write the P-Q capability band")
    common(p)
    p.add_argument("--points", type=int, default=201)
    p.set_defaults(func=cmd_pqmap)

    p = sub.add_parser("verify", help="run the numerical self-checks")
    p.add_argument("--quick", action="store_true", help="fewer random instances")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("identify", help="estimate the inner-loop constants C1, C2")
    common(p)
    p.add_argument("--mode", choices=OUTER_MODES)
    p.add_argument("--scenario", choices=KINDS)
    p.add_argument("--ticks", type=int, default=40)
    p.set_defaults(func=cmd_identify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.print_schema:
        print(print_schema(), end="")
        return EXIT_OK
    if args.cmd is None:
        ap.print_help()
        return EXIT_INVALID
    try:
        return args.func(args)
    except InvalidConfiguration as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidArgument, OutputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
