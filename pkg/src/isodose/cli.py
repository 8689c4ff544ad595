"""Command-line entry point: ``isodose fit`` and ``isodose simulate``."""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import ConfigError, ValidationError
from .report import FORMATTERS, FitRequest, InputError, build_report, read_counts_csv

OUTPUT_DIR_ENV = "ISODOSE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "isodose-output"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _level(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"confidence level must lie in (0, 1), got {text}")
    return value


def _percentile(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"percentile must lie in (0, 1), got {text}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isodose",
        description="Monotone dose-response estimation (IR and CIR) with confidence intervals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a dose,events,trials CSV file")
    fit.add_argument("input", help="CSV file with header dose,events,trials")
    fit.add_argument("--level", type=_level, default=0.9, help="interval coverage (default 0.9)")
    fit.add_argument("--percentile", type=_percentile, action="append", dest="percentiles",
                     metavar="P", help="target response rate for inverse estimation; repeatable "
                                       "(default 0.25, 0.5, 0.75)")
    fit.add_argument("--interval-method", default="Combined",
                     choices=["Combined", "Morris", "Wilson", "ClopperPearson", "Jeffreys",
                              "AgrestiCoull"], help="forward band (default Combined)")
    fit.add_argument("--pointwise-method", default="Wilson",
                     choices=["Wilson", "ClopperPearson", "Jeffreys", "AgrestiCoull"],
                     help="pointwise bounds merged into the Combined band (default Wilson)")
    fit.add_argument("--inverse-method", default="local", choices=["local", "global"])
    fit.add_argument("--local-anchor", default="design", choices=["design", "estimate"],
                     help="where local inverse half-widths are converted (default design)")
    fit.add_argument("--sequential", action="store_true",
                     help="widen bands for random (sequential) allocation")
    fit.add_argument("--grid", type=int, default=101, help="points in the sampled curve")
    fit.add_argument("--format", default="json", choices=sorted(FORMATTERS))
    fit.add_argument("--out", help="output file (default: standard output)")

    sim = sub.add_parser("simulate", help="reproduce a simulation table from a config file")
    sim.add_argument("config", help="key = value config file")
    sim.add_argument("--seed", type=_nonneg_int, help="override master_seed")
    sim.add_argument("--out", help=f"output directory (default ${OUTPUT_DIR_ENV} or "
                                   f"./{DEFAULT_OUTPUT_DIR})")
    return parser


def _error(msg: str) -> int:
    print(f"isodose: error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def cmd_fit(args) -> int:
    try:
        parsed = read_counts_csv(args.input)
    except InputError as exc:
        return _error(str(exc))
    except OSError as exc:
        return _error(f"cannot read {args.input}: {exc.strerror}")
    except ValidationError as exc:
        return _error(f"{args.input}: {exc}")
    if parsed.reordered:
        print(f"isodose: warning: {args.input}: rows were not sorted by dose; sorted on input",
              file=sys.stderr)
    try:
        req = FitRequest(
            percentiles=tuple(args.percentiles) if args.percentiles else (0.25, 0.5, 0.75),
            level=args.level,
            interval_method=args.interval_method,
            pointwise_method=args.pointwise_method,
            inverse_method=args.inverse_method,
            local_anchor=args.local_anchor,
            sequential=args.sequential,
            grid=args.grid,
        )
    except ValueError as exc:
        return _error(str(exc))
    report = build_report(parsed.data, req, source=str(args.input), reordered=parsed.reordered)
    text = FORMATTERS[args.format](report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .simbench.config import load_config
    from .simbench.tables import reproduce_table

    try:
        cfg = load_config(args.config, args.seed)
    except ConfigError as exc:
        return _error(f"{args.config}: {exc}")
    out_dir = Path(args.out or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)
    try:
        table = reproduce_table(cfg.table, cfg.ensemble_size, cfg.master_seed,
                                families=cfg.families, n_values=cfg.n_values,
                                level=cfg.level, workers=cfg.workers)
    except ConfigError as exc:
        return _error(str(exc))
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.table}_seed{cfg.master_seed}"
    (out_dir / f"{stem}.csv").write_text(table.to_csv(), encoding="utf-8")
    (out_dir / f"{stem}.txt").write_text(table.to_text(), encoding="utf-8")
    print(f"wrote {out_dir / stem}.csv and .txt", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "fit":
        return cmd_fit(args)
    return cmd_simulate(args)


if __name__ == "__main__":
    sys.exit(main())
