"""Command-line front end: ``gpdeco run | sweep | verify``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import ConfigError, GPError
from .runner import CSV_COLUMNS, JSON_FIELDS, run, write_outputs

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

_OUTPUTS = f"""\
outputs (written to --out, default ./gpdeco-out):
  results.csv     one row per sweep point; columns, in order:
                  {", ".join(CSV_COLUMNS)}
                  empty cells mean "not applicable"; floats use round-trip repr
  results.ndjson  one JSON object per sweep point with fields:
                  {", ".join(JSON_FIELDS)}
                  "inputs" echoes the full configuration of the point; non-finite
                  numbers are written as null
  *.dat           with --plot-data: two whitespace columns, '#' header
                  (factor_NNN.dat: t |F(t)|; sweep_<param>.dat: param delta_phi)

exit codes: 0 success, 1 computational failure, 2 configuration error
environment: GP_THREADS is used when --threads is not given
"""


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gpdeco",
        description="Geometric phase of a dephasing qubit: numerics, closed forms and Monte Carlo.",
        epilog=_OUTPUTS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: $GP_THREADS or 1)")
    common.add_argument("--seed", type=int, default=None, help="master seed, unsigned 64-bit")
    common.add_argument("--out", type=Path, default=None, help="output directory")

    for name, text in (("run", "evaluate a single configuration"), ("sweep", "evaluate every point of a sweep axis")):
        sp = sub.add_parser(name, parents=[common], help=text, description=text, epilog=_OUTPUTS,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("--config", type=Path, default=None, help="JSON or TOML configuration file")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a (dotted) key after the file is read; repeatable")
        sp.add_argument("--plot-data", action="store_true", help="also write gnuplot-ready .dat files")

    vp = sub.add_parser("verify", parents=[common], help="run the acceptance checks",
                        description="Run every acceptance check and print one pass/fail line per check.")
    vp.add_argument("--quick", action="store_true", help="Monte Carlo checks at M = 1000 with widened tolerance")
    return p


def _run(args: argparse.Namespace) -> int:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"mc.seed={args.seed}")
    try:
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "run" and config.sweep is not None:
        print("configuration error: config defines a sweep; use 'gpdeco sweep'", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "sweep" and config.sweep is None:
        print("configuration error: 'gpdeco sweep' needs a sweep block", file=sys.stderr)
        return EXIT_CONFIG

    records = run(config, threads=args.threads)
    out = args.out or Path("gpdeco-out")
    for path in write_outputs(records, out, config=config, plot_data=args.plot_data):
        print(f"wrote {path}")
    failed = [i for i, r in enumerate(records) if r.failed]
    for i in failed:
        print(f"point {i} failed: {records[i].error}", file=sys.stderr)
    for r in records:
        for note in r.notes:
            print(f"note: {note}", file=sys.stderr)
    return EXIT_FAILED if failed else EXIT_OK


def _verify(args: argparse.Namespace) -> int:
    from .acceptance import DEFAULT_SEED, numeric_report, run_all

    seed = DEFAULT_SEED if args.seed is None else args.seed
    if not 0 <= seed < 2**64:
        print("configuration error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    results = run_all(quick=args.quick, seed=seed, threads=args.threads, echo=print)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} checks passed")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / "verify.json"
        path.write_text(numeric_report(results) + "\n", encoding="utf-8")
        print(f"wrote {path}")
    return EXIT_OK if n_pass == len(results) else EXIT_FAILED


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("configuration error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "verify":
            return _verify(args)
        return _run(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
