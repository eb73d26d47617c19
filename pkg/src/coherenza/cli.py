"""Command-line front end.

Subcommands: ingest, synth, phase, extremes, coherence, cluster, analyze,
report. Exit codes: 0 success, 2 input error, 3 numerical failure,
4 configuration error. ``COHERENZA_THREADS`` caps BLAS/OpenMP threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from threadpoolctl import threadpool_limits

from .errors import InputError, NumericalError
from .io import write_binary, write_csv
from .pipeline import EMIT_FORMATS, ConfigError, RunConfig, run_analyze, run_report, run_stage
from .synth import config_from_tokens, generate_synthetic_with_meta

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_CONFIG = 0, 2, 3, 4

STAGES = ("ingest", "phase", "extremes", "coherence", "cluster")


def _common(p, cluster_default="off"):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="data file (csv or bin) or a previous run directory")
    src.add_argument("--synthetic", nargs="+", metavar="KEY=VALUE",
                     help="generate the input, e.g. seed=7 rows=5 cols=5 years=50")
    p.add_argument("--format", choices=("csv", "bin"))
    p.add_argument("--out", required=True)
    p.add_argument("--smooth", choices=("on", "off"), default=None)
    p.add_argument("--tie", choices=("positive", "drop"), default="positive")
    p.add_argument("--sigma", choices=("population", "sample"), default="population")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=1.0,
                   help="extremity threshold in standard deviations (default 1.0)")
    p.add_argument("--emit", action="append", choices=EMIT_FORMATS)
    p.set_defaults(cluster_default=cluster_default)


def build_parser():
    parser = argparse.ArgumentParser(prog="coherenza", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ("analyze", "report"):
        _common(sub.add_parser(name), cluster_default="on" if name == "cluster" else "off")
    syn = sub.add_parser("synth", help="write a synthetic field to a data file")
    syn.add_argument("--out", required=True)
    syn.add_argument("--format", choices=("csv", "bin"))
    syn.add_argument("params", nargs="*", metavar="KEY=VALUE")
    return parser


def _config(args):
    # clustering always runs on smoothed data inside `analyze`; standalone
    # `cluster` honours --smooth with "on" as its default
    smooth = args.smooth or args.cluster_default
    is_cluster = args.command == "cluster"
    src = args.input
    if args.command == "report" and src is None and not args.synthetic:
        src = args.out  # report reads the stage summaries already in the run directory
    return RunConfig(
        out=args.out,
        input=src,
        format=args.format,
        synthetic=tuple(args.synthetic or ()),
        smooth="off" if is_cluster else smooth,
        cluster_smooth=smooth if is_cluster else "on",
        tie=args.tie,
        sigma=args.sigma,
        threshold=args.threshold,
        k=args.k,
        seed=args.seed,
        emit=tuple(args.emit) if args.emit else EMIT_FORMATS,
    )


def _threads():
    raw = os.environ.get("COHERENZA_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"COHERENZA_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("COHERENZA_THREADS must be at least 1")
    return n


def _synth(args):
    field, meta = generate_synthetic_with_meta(config_from_tokens(args.params))
    out = Path(args.out)
    fmt = args.format or ("csv" if out.suffix.lower() == ".csv" else "bin")
    out.parent.mkdir(parents=True, exist_ok=True)
    (write_csv if fmt == "csv" else write_binary)(field, out)
    return {"path": str(out), "n_locations": field.n_locations, "n_years": field.n_years,
            "clamp_rate": meta.clamp_rate}


def _dispatch(args):
    if args.command == "synth":
        try:
            return _synth(args)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    config = _config(args)
    if args.command == "analyze":
        manifest = run_analyze(config)
        return {"out": config.out, "artifacts": len(manifest["artifacts"]), "config_hash": manifest["config_hash"]}
    if args.command == "report":
        manifest = run_report(config)
        return {"out": config.out, "artifacts": len(manifest["artifacts"])}
    run_stage(args.command, config)
    return {"out": config.out, "stage": args.command}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        threads = _threads()
        with threadpool_limits(limits=threads):
            result = _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
