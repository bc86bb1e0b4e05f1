"""Command-line front end: run <config>, preset <name>, report <dirs...>.

Exit codes: 0 success, 2 configuration error, 3 runtime error.  The output
root defaults to ./results and can be overridden with BEAMSCHED_OUT.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .artifacts import merge_reports, write_run_artifacts, write_summary
from .config import ConfigError, apply_override, parse_config
from .presets import PresetError, _manifest, run_preset, run_replications
from .streams import replication_seeds

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _output_root(arg) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get("BEAMSCHED_OUT", "results"))


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    for item in args.set or []:
        key, _, value = item.partition("=")
        apply_override(cfg, key, value)
    if args.seed is not None:
        cfg.seed = args.seed
    out = _output_root(args.out) / cfg.scenario
    seeds = replication_seeds(cfg.seed, cfg.replications)
    t0 = time.perf_counter()
    logs = run_replications(cfg, seeds, cfg.workers)
    for log in logs:
        write_run_artifacts(log, cfg, out / f"seed{log.seed}")
    _manifest(out, "run", cfg, seeds, time.perf_counter() - t0)
    print(f"wrote {len(logs)} run(s) under {out}")
    return EXIT_OK


def _cmd_preset(args) -> int:
    overrides = {}
    for item in args.set or []:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(item, "--set expects section.key=value")
        overrides[key] = value
    out = run_preset(args.name, overrides,
                     out_dir=args.out or (_output_root(None) / args.name),
                     seed=args.seed)
    print(f"preset {args.name} written to {out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    summary = merge_reports(args.dirs)
    out = _output_root(args.out) / "report"
    write_summary(summary, out)
    for label, g in summary["groups"].items():
        md = g.get("mean_delay_slots")
        delay = f"{md['mean']:.1f} +- {md['ci95']:.1f} slots" if md else "n/a"
        print(f"{label}: n={g['n_runs']} mean delay {delay}")
    print(f"summary written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="beamsched",
        description="Seeded simulator for single-server scheduling over FSO "
                    "links with stochastic switchover delays")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run an experiment from a config file")
    pr.add_argument("config", help="INI config path")
    pr.add_argument("--set", action="append", metavar="section.key=value")
    pr.add_argument("--seed", type=int)
    pr.add_argument("--out")
    pr.set_defaults(fn=_cmd_run)

    pp = sub.add_parser("preset", help="run a named figure preset")
    pp.add_argument("name")
    pp.add_argument("--set", action="append", metavar="section.key=value")
    pp.add_argument("--seed", type=int)
    pp.add_argument("--out")
    pp.set_defaults(fn=_cmd_preset)

    pt = sub.add_parser("report", help="merge run directories into a summary")
    pt.add_argument("dirs", nargs="+")
    pt.add_argument("--out")
    pt.set_defaults(fn=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, PresetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:   # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
