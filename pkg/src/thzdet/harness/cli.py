"""Command-line entry point ``thzdet``.

Every subcommand writes into ``--out`` (default ``results``).  On failure a
single JSON line ``{"error": <type>, "message": <text>}`` goes to stderr and
the exit status is nonzero (2 for configuration errors, 1 otherwise).
"""

import argparse
import json
import os
import sys
from typing import List, Optional

from ..channel import dump_channel
from ..complexity import SCHEMES, flops_detector, reuse_plan
from ..constellation import get_constellation
from ..errors import ConfigInvalid, ThzdetError
from .config import SimulationConfig, load_config
from .results import emit_results, write_flops_csv, write_pep_csv, write_snapshot
from .simulate import draw_channels, run_ber_sweep, run_pep_experiment, \
    run_wideband_reuse

SUBCOMMANDS = ("sweep", "pep", "wideband", "complexity", "channel-dump")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thzdet", description="THz MIMO detection laboratory")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=name != "complexity",
                       help="TOML experiment file")
        s.add_argument("--seed", type=int, default=None, help="override the config seed")
        s.add_argument("--out", default="results", help="output directory")
        s.add_argument("--workers", type=int, default=1, help="worker processes")
        s.add_argument("--format", choices=("csv", "plotdata"), default="csv")
    return p


def _load(args) -> SimulationConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _expect(cfg: SimulationConfig, *kinds: str) -> None:
    if cfg.kind not in kinds:
        raise ConfigInvalid(f"config kind {cfg.kind!r} does not fit this subcommand")


def _complexity_rows(cfg: Optional[SimulationConfig]):
    if cfg is None:
        grid = [(q, q) for q in (4, 8, 16)]
        sizes, m, reuse = (4, 16), 64, (0.0, 0.25, 0.5)
    else:
        grid = [(cfg.q_t, cfg.q_r)]
        sizes = (get_constellation(cfg.constellation).order,)
        wb = cfg.wideband
        m, reuse = (wb.n_subcarriers, wb.reuse) if wb else (1, (0.0,))
    for q_t, q_r in grid:
        for k in sizes:
            for p in reuse:
                plan = reuse_plan(m, p)
                for s in SCHEMES:
                    fc = flops_detector(s, q_t, k, m, plan, q_r=q_r)
                    yield [s, q_t, q_r, k, m, p, fc.radd, fc.rmul]


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigInvalid("--workers must be >= 1")
        os.makedirs(args.out, exist_ok=True)
        if args.command == "complexity":
            cfg = _load(args) if args.config else None
            path = os.path.join(args.out, "complexity.csv")
            with open(path, "w") as fh:
                fh.write("scheme,q_t,q_r,const_size,m_subcarriers,reuse,radd,rmul\n")
                for row in _complexity_rows(cfg):
                    fh.write(",".join(str(v) for v in row) + "\n")
            if cfg is not None:
                write_snapshot(cfg, args.out)
            return 0
        cfg = _load(args)
        if args.command == "sweep":
            _expect(cfg, "sweep")
            emit_results(run_ber_sweep(cfg, workers=args.workers), cfg, args.out, args.format)
        elif args.command == "wideband":
            _expect(cfg, "wideband")
            recs, flops = run_wideband_reuse(cfg, workers=args.workers)
            emit_results(recs, cfg, args.out, args.format)
            if flops:
                write_flops_csv(flops, os.path.join(args.out, "flops.csv"))
        elif args.command == "pep":
            _expect(cfg, "pep")
            write_pep_csv(run_pep_experiment(cfg), os.path.join(args.out, "pep.csv"))
            write_snapshot(cfg, args.out)
        elif args.command == "channel-dump":
            hs = draw_channels(cfg)
            with open(os.path.join(args.out, "channels.txt"), "w") as fh:
                dump_channel(hs, fh)
            write_snapshot(cfg, args.out)
        return 0
    except (ThzdetError, ValueError, OSError) as exc:
        line = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(line), file=sys.stderr)
        return 2 if isinstance(exc, ConfigInvalid) else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
