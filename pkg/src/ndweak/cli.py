"""
Command-line front end for the ndweak library.

Subcommands: ``run``, ``sweep``, ``verify``.

Exit status: 0 on success, 2 for configuration errors, 3 for parameters
outside the physical range, 4 for numerical-consistency failures.
"""

import argparse
import os
import sys
from pathlib import Path

from . import report
from .config import SWEEP_PARAMETERS, ConfigError, load_config
from .errors import (
    BoundaryError,
    ConformanceError,
    ConsistencyError,
    EmptyPostselectionError,
    NumericError,
    PhysicsRangeError,
    PostselectionImpossibleError,
)

EXIT_OK, EXIT_PARSE, EXIT_RANGE, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def resolve_threads(requested):
    """--threads wins, then NDWEAK_THREADS, then 1; 0 means one per CPU."""
    if requested is None:
        env = os.environ.get("NDWEAK_THREADS", "").strip()
        if not env:
            return 1
        try:
            requested = int(env)
        except ValueError:
            raise UsageError(f"NDWEAK_THREADS must be an integer, got {env!r}") from None
    if requested < 0:
        raise UsageError("thread count must be non-negative")
    return requested or (os.cpu_count() or 1)


def parse_values(text):
    from .config import _parse_floats

    try:
        values = _parse_floats(text or "")
    except (ValueError, TypeError) as exc:
        raise UsageError(f"--values: {exc}") from None
    if not values:
        raise UsageError("--values must list at least one value")
    return values


def _suffix(fmt):
    return ".csv" if fmt == "csv" else ".json"


def write_run(result, cfg, out, stem, fmt, plot):
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for table in result.tables:
        name = f"{stem}_{table.name}{_suffix(fmt)}"
        report.write_text(out / name, report.render(table.columns, report.numeric_rows(table), fmt))
        files.append(name)
    rows = [[q, report.format_number(v)] for q, v in result.summary]
    name = f"{stem}_summary{_suffix(fmt)}"
    report.write_text(out / name, report.render(["quantity", "value"], rows, fmt))
    files.append(name)
    if plot:
        from . import plotting

        for table in result.tables:
            png = f"{stem}_{table.name}.png"
            if table.name == "distribution":
                plotting.plot_distribution(table, out / png, title=stem)
            else:
                plotting.plot_characteristic(table, out / png)
            files.append(png)
    meta = f"{stem}_meta.json"
    files.append(meta)
    report.write_text(out / meta, report.metadata(cfg, files, {"problems": result.problems}))
    return files


def cmd_run(args):
    cfg = load_config(args.config)
    result = report.compute_run(cfg)
    stem = Path(args.config).stem
    files = write_run(result, cfg, Path(args.out), stem, args.format, args.plot or cfg["outputs"]["plot"])
    for f in files:
        print(Path(args.out) / f)
    period = result.value("oscillation_period_measured")
    if period == period:
        print(f"oscillation period {period:.6g} (expected {result.value('oscillation_period_expected'):.6g})")
    if result.problems:
        for p in result.problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(args):
    values = parse_values(args.values)
    cfg = load_config(args.config)
    threads = resolve_threads(args.threads)
    table = report.compute_sweep(cfg, args.param, values, threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{Path(args.config).stem}_{table.name}"
    rows = report.numeric_rows(table, label=args.param)
    name = f"{stem}{_suffix(args.format)}"
    report.write_text(out / name, report.render(table.columns, rows, args.format))
    files = [name]
    if args.plot or cfg["outputs"]["plot"]:
        from . import plotting

        plotting.plot_sweep(table, out / f"{stem}.png")
        files.append(f"{stem}.png")
    meta = f"{stem}_meta.json"
    files.append(meta)
    report.write_text(out / meta, report.metadata(cfg, files, {"sweep": {"parameter": args.param, "values": values}}))
    for f in files:
        print(out / f)
    return EXIT_OK


def cmd_verify(args):
    from .verify import format_result, run_checks

    results = run_checks(args.configs)
    for r in results:
        print(format_result(r))
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def build_parser():
    parser = argparse.ArgumentParser(prog="ndweak", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="INI run configuration")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--threads", type=int, default=None, help="worker threads, 0 = one per CPU")
        p.add_argument("--plot", action="store_true", help="also write PNG figures")

    run = sub.add_parser("run", help="evaluate one configuration")
    common(run)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="repeat a run over values of one parameter")
    common(sweep)
    sweep.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMETERS))
    sweep.add_argument("--values", required=True, help="comma-separated list or start:stop:count")
    sweep.set_defaults(func=cmd_sweep)

    verify = sub.add_parser("verify", help="run the built-in consistency checks")
    verify.add_argument("--configs", type=int, default=100, help="random spin configurations to compare")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_PARSE
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PhysicsRangeError, ConformanceError, EmptyPostselectionError, PostselectionImpossibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except (NumericError, ConsistencyError, BoundaryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
