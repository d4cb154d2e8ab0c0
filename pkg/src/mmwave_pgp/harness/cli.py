"""Command line entry point ``mmwave-pgp``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .config import PRESETS, load_config, preset
from .report import emit, emit_opgpa, fmt, summary_from_dir
from .runner import run_scenario

log = logging.getLogger("mmwave_pgp")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def _load(args):
    cfg = load_config(args.config) if args.config else preset(args.preset)
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.trials is not None:
        kw["trials"] = args.trials
    if getattr(args, "snr", None):
        kw["snr_db"] = args.snr
    if args.out is not None:
        kw["out_dir"] = args.out
    return cfg.replace(**kw) if kw else cfg


def _print_summary(cfg, summary, stream=None):
    stream = stream or sys.stdout
    print(f"scenario {cfg.name}", file=stream)
    for (group, kind), pts in sorted(summary.curves.items()):
        row = "  ".join(f"{snr:g}:{mean:.3f}" for snr, mean, _, _ in pts)
        print(f"  {group:<6} {kind:<16} {row}", file=stream)
    d = summary.to_dict()
    print(
        f"SE ({d['se_kind']} @ {fmt(d['operating_snr_db'])} dB): median {fmt(d['se_median'])} "
        f"bps/Hz, SEUA {fmt(d['seua_median'])} bps/Hz/m^2 over {fmt(d['area_m2'])} m^2",
        file=stream,
    )
    if not math.isnan(summary.ref_se):
        print(
            f"printed reference: SE {fmt(summary.ref_se)}, SEUA {fmt(summary.ref_seua)} "
            f"(SE / area = {fmt(d['ref_seua_from_area'])})",
            file=stream,
        )


def cmd_run(args) -> int:
    cfg = _load(args)
    result = run_scenario(cfg, threads=args.threads)
    files = emit(result, cfg.out_dir)
    for f in result.failures:
        print(f"trial {f.trial} (seed {f.seed}) failed at {f.stage}: {f.error}", file=sys.stderr)
    if result.records:
        _, summary = summary_from_dir(cfg.out_dir)
        _print_summary(cfg, summary)
    print(f"wrote {len(files)} files to {cfg.out_dir}")
    return 0 if len(result.failures) < cfg.trials else 1


def cmd_sweep_opgpa(args) -> int:
    cfg = _load(args)
    if args.is_grid:
        cfg = cfg.replace(opgpa_is=args.is_grid)
    if not cfg.opgpa_is:
        print("no I_S targets: pass --is-grid or set opgpa_is", file=sys.stderr)
        return 2
    if args.snr0 is not None:
        cfg = cfg.replace(opgpa_snr0_db=args.snr0)
    result = run_scenario(cfg, threads=args.threads, opgpa_only=True)
    files = emit_opgpa(result.opgpa, cfg.out_dir)
    for f in result.failures:
        print(f"trial {f.trial} (seed {f.seed}) failed at {f.stage}: {f.error}", file=sys.stderr)
    print(Path(files[1]).read_text(encoding="utf-8"), end="")
    return 0 if result.opgpa else 1


def cmd_report(args) -> int:
    cfg, summary = summary_from_dir(args.in_dir)
    _print_summary(cfg, summary)
    if args.json:
        print(json.dumps(summary.to_dict(), indent=1, sort_keys=True, default=str))
    return 0


def cmd_build_table(args) -> int:
    from ..mutual_info import qam
    from ..precoding import PgpBlockOptimizer, _table_key

    path = Path(args.out)
    doc = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
    for M in args.M:
        opt = PgpBlockOptimizer(qam(M), args.L, step_db=args.step, use_shipped_table=False)
        opt.fill_table()
        doc[_table_key(M, args.L)] = {
            "step_db": args.step,
            "blocks": {str(k): [round(t, 10), round(p, 10)]
                       for k, (t, p) in sorted(opt.table_entries().items())},
        }
        print(f"M={M}: {len(opt.table_entries())} blocks")
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def _common(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="flat key=value config file")
    src.add_argument("--preset", default="scenario1", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker processes (default: SIM_THREADS or all cores)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmwave-pgp", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="Monte-Carlo run of a scenario")
    _common(p)
    p.add_argument("--snr", type=_floats, help="SNR_0 sweep in dB, e.g. '0,10,20'")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-opgpa", help="OPGPA vs NOPGPA average SNR over QoS targets")
    _common(p)
    p.add_argument("--is-grid", type=_floats, help="target bits per UE, e.g. '1,2,3,4'")
    p.add_argument("--snr0", type=float, help="initial SNR_0 in dB")
    p.set_defaults(func=cmd_sweep_opgpa)

    p = sub.add_parser("report", help="summarize a finished run directory")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("build-table", help="tabulate optimized PGP blocks")
    p.add_argument("--M", type=int, nargs="+", default=[4, 16])
    p.add_argument("--L", type=int, default=10)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_table)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
