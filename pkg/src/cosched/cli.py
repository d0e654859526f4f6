"""Command line entry point: ``cosched run|compare|dump-reports``."""

from __future__ import annotations

import argparse
import sys

from . import kernels
from .errors import ConfigurationError
from .ilp import reduce_candidates
from .pf import PfState
from .sim import (
    SCHEDULERS,
    DropContext,
    SimConfig,
    compare,
    drop_seed,
    generate_drop,
    load_config,
    normalized_table,
    run_experiment,
    write_outputs,
)


def _config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    overrides = {}
    for key in ("seed", "scheduler", "m_tilde", "m_prime", "workers", "drops", "ttis"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    return cfg.replace(**overrides) if overrides else cfg


def _common(p):
    p.add_argument("config", nargs="?", help="JSON config file (fields of SimConfig)")
    p.add_argument("--seed", type=int)
    p.add_argument("--m-tilde", dest="m_tilde", type=int)
    p.add_argument("--m-prime", dest="m_prime", type=int)
    p.add_argument("--drops", type=int)
    p.add_argument("--ttis", type=int)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cosched", description="Coordinated scheduling with muting")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scheduler over all drops")
    _common(p)
    p.add_argument("--scheduler", choices=SCHEDULERS)
    p.add_argument("--out", help="output path stem; writes <stem>.json and <stem>.csv")

    p = sub.add_parser("compare", help="run several schedulers on identical drops")
    _common(p)
    p.add_argument("--schedulers", default=",".join(SCHEDULERS))
    p.add_argument("--baseline", default="noncoop_pfs", choices=SCHEDULERS)
    p.add_argument("--out")

    p = sub.add_parser("dump-reports", help="write the CSI reports of one drop as CSV")
    _common(p)
    p.add_argument("--drop", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--subproblem", help="also dump the first-TTI ILP of every PRB here")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    if args.command == "run":
        summary = run_experiment(cfg)
        res = {cfg.scheduler: summary}
        print(
            f"{cfg.scheduler}: geo_mean={summary.geo_mean:.6g} cell_edge={summary.cell_edge:.6g} "
            f"muted_fraction={summary.muted_fraction:.4f} [{kernels.BACKEND}]"
        )
        if args.out:
            for path in write_outputs(args.out, cfg, res):
                print(f"wrote {path}")
        return 0

    if args.command == "compare":
        names = [s.strip() for s in args.schedulers.split(",") if s.strip()]
        bad = [s for s in names if s not in SCHEDULERS]
        if bad:
            print(f"unknown schedulers: {bad}", file=sys.stderr)
            return 2
        res = compare(cfg, names, baseline=args.baseline)
        print(normalized_table(res, args.baseline))
        if args.out:
            for path in write_outputs(args.out, cfg, res, baseline=args.baseline):
                print(f"wrote {path}")
        return 0

    # dump-reports
    if not 0 <= args.drop < cfg.drops:
        print(f"drop index must lie in [0, {cfg.drops})", file=sys.stderr)
        return 2
    drop = generate_drop(cfg, drop_seed(cfg, args.drop))
    ctx = DropContext(cfg.replace(scheduler="cs_ilp"), drop)
    ctx.reports.to_csv(args.out)
    print(f"wrote {args.out}")
    if args.subproblem:
        state = PfState.initial(drop.scenario.num_ue, cfg.beta)
        with open(args.subproblem, "w") as fh:
            for l in range(cfg.num_prb):
                reduce_candidates(ctx.unique, ctx.reports, state, l).dump(fh)
        print(f"wrote {args.subproblem}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
