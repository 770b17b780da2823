#!/usr/bin/env python3
"""
ActBench - command-line interface for the activation benchmarking lab.

Usage:
    actbench bench-infer --functions relu,tanh --max-exponent 4
    actbench analyze --fixture table1 --spread --n 4
    actbench bench-train --mnist-dir data/mnist --functions relu --train-limit 6000
    actbench costmodel --shipped

Exit status: 0 success, 1 error, 2 usage error, 3 finished with skipped
measurements.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from ..bench import analysis, harness, mnist
from ..config import GIB, load_config
from ..core.activations import ActivationKind, FunctionGroup, ordered_kinds
from ..core.network import NetworkConfig
from ..costmodel.listing import Listing, load_listings, parse_listings
from ..costmodel.tally import CostTable, cost_report
from ..fixtures import SHIPPED_LISTINGS, fixture_names, read_listing
from ..utils.error_handling import ActBenchError, ValidationError
from ..utils.file_utils import ensure_directory
from ..utils.logging_config import configure_for_environment, get_logger, setup_logging
from ..utils.validation import MAX_SIZE_EXPONENT
from .manifest import RunManifest, write_json_output

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_PARTIAL = 3


class ProgressTracker:
    """Simple progress tracking for CLI operations."""

    def __init__(self, show_progress: bool = True):
        self.show_progress = show_progress
        self.last_progress = -1

    def __call__(self, current: int, total: int, message: str = ""):
        if not self.show_progress or total == 0:
            return

        progress_percent = int((current / total) * 100)
        if progress_percent != self.last_progress:
            print(f"\r[{progress_percent:3d}%] {message}", end="", flush=True, file=sys.stderr)
            self.last_progress = progress_percent

        if current >= total:
            print(file=sys.stderr)


# Argument types -----------------------------------------------------------

def function_list(text: str) -> List[ActivationKind]:
    """``all`` or a comma-separated list of function names."""
    if text.strip().lower() == "all":
        return list(ordered_kinds())
    try:
        return [ActivationKind.parse(name) for name in text.split(",") if name.strip()]
    except ValidationError as e:
        raise argparse.ArgumentTypeError(e.message)


def size_exponent(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size exponent must be an integer, got {text!r}")
    if not 0 <= value <= MAX_SIZE_EXPONENT:
        raise argparse.ArgumentTypeError(
            f"size exponent must lie in [0, {MAX_SIZE_EXPONENT}], got {value}"
        )
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _arguments_snapshot(args: argparse.Namespace) -> Dict[str, object]:
    snapshot = {}
    for key, value in vars(args).items():
        if key == "handler":
            continue
        if isinstance(value, list):
            value = [str(v) for v in value]
        elif isinstance(value, Path):
            value = str(value)
        snapshot[key] = value
    return snapshot


def _functions_or_default(args: argparse.Namespace, default: Sequence[ActivationKind]):
    return args.functions if args.functions else list(default)


# Commands -----------------------------------------------------------------

def bench_infer_command(args: argparse.Namespace) -> int:
    """Handle the inference timing sweep."""
    print("Inference Benchmark")
    print("=" * 50)

    config = load_config()
    platform_label = args.platform or config.platform_label
    device = args.device or config.device
    memory_cap = int(args.memory_cap_gib * GIB) if args.memory_cap_gib else config.memory_cap_bytes
    if args.min_exponent > args.max_exponent:
        raise ValidationError(
            "exponents", (args.min_exponent, args.max_exponent),
            "--min-exponent must not exceed --max-exponent",
        )

    plan = harness.BenchPlan(
        functions=_functions_or_default(args, ordered_kinds()),
        exponents=range(args.min_exponent, args.max_exponent + 1),
        runs=args.runs,
        time_budget_seconds=args.budget_seconds,
        pretrain_epochs=args.pretrain_epochs,
        seed=args.seed,
        batch_size=args.batch_size,
        platform_label=platform_label,
        device=device,
        memory_cap_bytes=memory_cap,
        workload_dir=args.workload_dir,
    )
    network = NetworkConfig.benchmark(
        seed=args.seed, hidden_width=args.hidden_width, hidden_layers=args.hidden_layers
    )
    manifest = RunManifest("bench-infer", _arguments_snapshot(args), args.seed, platform_label, device)

    print(f"Functions: {', '.join(f.value for f in plan.functions)}")
    print(f"Sizes: 10^{plan.exponents[0]} .. 10^{plan.exponents[-1]} instances, {plan.runs} runs")
    print(f"Platform: {platform_label} ({device})")

    report = harness.run_inference_bench(
        plan, network, progress_callback=ProgressTracker(not args.quiet)
    )

    out_dir = ensure_directory(args.out or config.output_dir)
    csv_path = harness.write_records_csv(report.records, out_dir / "timings.csv")
    json_path = write_json_output(harness.report_to_json(report), out_dir / "aggregate.json")
    manifest.add_output("timings", csv_path)
    manifest.add_output("aggregate", json_path)
    manifest.complete = report.complete
    manifest.write(out_dir)

    print(f"\nRecords: {len(report.records)} of {plan.expected_records}")
    if not report.complete:
        print(f"Skipped: {len(report.skipped)} ({report.skipped[0].reason})")
    print(f"Results written to {out_dir}")
    return EXIT_OK if report.complete else EXIT_PARTIAL


def analyze_command(args: argparse.Namespace) -> int:
    """Handle spread, identity-relative and curve analysis of timing tables."""
    if args.fixture:
        table = analysis.load_fixture(args.fixture)
    else:
        table = analysis.load_timings(args.input)
    group = FunctionGroup.DROPOUT if args.group == "dropout" else FunctionGroup.ACTIVATION

    print(f"Timing Analysis: {table.name} ({table.platform or 'unknown platform'})")
    print("=" * 50)

    show_table = args.table or not (args.spread or args.relative or args.curve or args.compare)

    if args.spread:
        if args.n is not None:
            summary = analysis.group_spread(table.column(args.n), group, args.n)
            print(
                f"Spread {group.value} n={args.n}: {summary.ratio:.2f} "
                f"({summary.argmax.value} {summary.max_mean_s:.3e}s / "
                f"{summary.argmin.value} {summary.min_mean_s:.3e}s)"
            )
        else:
            for summary in analysis.spread_series(table, group):
                print(
                    f"n={summary.size_exponent}: {summary.ratio:.2f} "
                    f"({summary.argmax.value} / {summary.argmin.value})"
                )

    if args.relative:
        if args.n is not None:
            relative = analysis.relative_to_identity(table.column(args.n), args.n)
            print(
                f"Relative to Identity n={args.n}: mean {relative.mean_ratio:.2f}, "
                f"sd {relative.sd_ratio:.2f}"
            )
            for kind, ratio in analysis.slowest_functions(relative.ratios, k=3):
                print(f"  {kind.value}: {ratio:.2f}")
        else:
            for relative in analysis.identity_relative_series(table):
                print(
                    f"n={relative.size_exponent}: mean {relative.mean_ratio:.2f}, "
                    f"sd {relative.sd_ratio:.2f}"
                )

    comparison = None
    if args.compare:
        others = [analysis.load_fixture(name) for name in fixture_names() if name != table.name]
        comparison = analysis.compare_platforms([table] + others, group)
        shown = comparison if args.n is None else comparison[comparison["n"] == args.n]
        print(shown.to_string(index=False, float_format=lambda v: f"{v:.2f}"))

    curve = analysis.per_instance_curve(table)
    if args.curve and not args.out:
        print(analysis.curve_to_frame(curve).to_csv(index=False), end="")

    if show_table:
        print()
        print(analysis.emit_table(table, marking=not args.no_marking), end="")

    if args.out:
        out_dir = ensure_directory(args.out)
        manifest = RunManifest("analyze", _arguments_snapshot(args), None, table.platform,
                               table.device)
        manifest.add_output("curve", analysis.write_curve_csv(curve, out_dir / "curve.csv"))
        manifest.add_output(
            "spread",
            analysis.write_spread_csv(analysis.spread_series(table, group), out_dir / "spread.csv"),
        )
        manifest.add_output(
            "relative",
            analysis.write_relative_csv(
                analysis.identity_relative_series(table), out_dir / "relative.csv"
            ),
        )
        if comparison is not None:
            compare_path = out_dir / "compare.csv"
            comparison.to_csv(compare_path, index=False)
            manifest.add_output("compare", compare_path)
        table_path = out_dir / "table.txt"
        table_path.write_text(analysis.emit_table(table, marking=not args.no_marking),
                              encoding="utf-8")
        manifest.add_output("table", table_path)
        manifest.write(out_dir)
        print(f"\nResults written to {out_dir}")
    return EXIT_OK


def bench_train_command(args: argparse.Namespace) -> int:
    """Handle the MNIST train-to-threshold experiment."""
    print("Training Experiment")
    print("=" * 50)

    config = load_config()
    images_path, labels_path = mnist.find_idx_pair(args.mnist_dir)
    data = mnist.load_idx(images_path, labels_path)
    functions = _functions_or_default(args, [ActivationKind.RELU])
    base = NetworkConfig.mnist(
        seed=args.seed, hidden_width=args.hidden_width, hidden_layers=args.hidden_layers
    )
    manifest = RunManifest("bench-train", _arguments_snapshot(args), args.seed,
                           config.platform_label, config.device)

    results = mnist.run_train_experiment(
        functions,
        data,
        base,
        progress_callback=ProgressTracker(not args.quiet),
        threshold=args.threshold,
        max_epochs=args.max_epochs,
        runs=args.runs,
        validation_size=args.validation_size,
        train_limit=args.train_limit,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
    )

    for result in results:
        epochs = ",".join(str(run.epochs_used) for run in result.runs)
        flag = "  [did not reach target]" if result.any_run_failed else ""
        print(
            f"{result.function.value:<14} {result.mean_seconds:10.3f}s "
            f"± {result.sd_seconds:.3f}s  epochs {epochs}{flag}"
        )

    out_dir = ensure_directory(args.out or config.output_dir)
    for key, path in mnist.write_train_csvs(results, out_dir).items():
        manifest.add_output(key, path)
    manifest.write(out_dir)
    print(f"\nResults written to {out_dir}")
    return EXIT_OK


def costmodel_command(args: argparse.Namespace) -> int:
    """Handle micro-op tallies of instruction listings."""
    sources: List[Dict[str, Listing]] = []
    if args.shipped:
        sources += [parse_listings(read_listing(name), f"{name}.lst") for name in SHIPPED_LISTINGS]
    sources += [load_listings(path) for path in args.listings]
    if not sources:
        raise ValidationError("listings", None, "give listing files or --shipped")

    table = CostTable.from_csv(args.cost_table) if args.cost_table else CostTable.default()
    resolver: Dict[str, Listing] = {}
    for routines in sources:
        resolver.update(routines)
    entry_points = {}
    for routines in sources:
        first = next(iter(routines.values()))
        entry_points[first.label] = first

    report = cost_report(entry_points, table, resolver)

    print("Micro-op Cost Model")
    print("=" * 50)
    for line in report.lines():
        print(line)

    if args.out:
        out_dir = ensure_directory(args.out)
        manifest = RunManifest("costmodel", _arguments_snapshot(args))
        path = write_json_output(
            {
                "totals": report.totals,
                "ratios": {f"{a}/{b}": r for (a, b), r in report.ratios.items()},
            },
            out_dir / "costmodel.json",
        )
        manifest.add_output("costmodel", path)
        manifest.write(out_dir)
    return EXIT_OK


# Parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actbench",
        description="Benchmark and analyse the cost of neural-network activation functions",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging and tracebacks")
    parser.add_argument("--log-level", help="Logging level (overrides ACTBENCH_LOG_LEVEL)")
    parser.add_argument("--log-dir", type=Path, help="Directory for rotating log files")
    parser.add_argument("--json-logs", action="store_true", help="JSON-formatted log files")
    parser.add_argument("--quiet", "-q", action="store_true", help="No progress output")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    valid_names = ", ".join(kind.value for kind in ordered_kinds())

    infer = subparsers.add_parser("bench-infer", help="Time forward inference per activation")
    infer.add_argument("--functions", type=function_list,
                       help=f"'all' (default) or comma-separated names: {valid_names}")
    infer.add_argument("--min-exponent", type=size_exponent, default=0)
    infer.add_argument("--max-exponent", type=size_exponent, default=6,
                       help="Largest workload is 10^n instances (n <= 8, default 6)")
    infer.add_argument("--runs", type=positive_int, default=3)
    infer.add_argument("--pretrain-epochs", type=non_negative_int, default=0,
                       help="Random-data Adam pre-training epochs (2000 for the full protocol)")
    infer.add_argument("--budget-seconds", type=float, default=harness.ONE_DAY_SECONDS)
    infer.add_argument("--seed", type=non_negative_int, default=0)
    infer.add_argument("--batch-size", type=positive_int, help="Split each workload into batches")
    infer.add_argument("--memory-cap-gib", type=float,
                       help="Largest workload to allocate (default 8, or ACTBENCH_MEMORY_CAP_GIB)")
    infer.add_argument("--workload-dir", type=Path,
                       help="Save generated workloads here and reuse them on later sweeps")
    infer.add_argument("--platform", help="Platform label (default ACTBENCH_PLATFORM or host)")
    infer.add_argument("--device", help="Device label recorded with timings (default cpu)")
    infer.add_argument("--hidden-width", type=positive_int, default=1024)
    infer.add_argument("--hidden-layers", type=non_negative_int, default=4)
    infer.add_argument("--out", "-o", type=Path, help="Output directory")
    infer.set_defaults(handler=bench_infer_command)

    analyze = subparsers.add_parser("analyze", help="Spread statistics and tables")
    source = analyze.add_mutually_exclusive_group(required=True)
    source.add_argument("--fixture", choices=fixture_names(), help="Shipped timing table")
    source.add_argument("--input", type=Path, help="Harness or fixture-schema CSV")
    analyze.add_argument("--group", choices=["activation", "dropout"], default="activation")
    analyze.add_argument("--n", type=size_exponent, help="Size exponent to report")
    analyze.add_argument("--spread", action="store_true", help="Slowest / fastest within the group")
    analyze.add_argument("--relative", action="store_true", help="Activation means over Identity")
    analyze.add_argument("--curve", action="store_true", help="Per-instance time curve CSV")
    analyze.add_argument("--table", action="store_true", help="Print the monospace table")
    analyze.add_argument("--no-marking", action="store_true", help="Do not mark column minima")
    analyze.add_argument("--compare", action="store_true",
                         help="Spread across this table and the shipped platform tables")
    analyze.add_argument("--out", "-o", type=Path, help="Write CSV outputs to this directory")
    analyze.set_defaults(handler=analyze_command)

    train = subparsers.add_parser("bench-train", help="MNIST train-to-threshold experiment")
    train.add_argument("--mnist-dir", type=Path, required=True)
    train.add_argument("--functions", type=function_list, help="'all' or comma-separated names")
    train.add_argument("--threshold", type=float, default=0.90)
    train.add_argument("--max-epochs", type=non_negative_int, default=100)
    train.add_argument("--runs", type=positive_int, default=3)
    train.add_argument("--train-limit", type=positive_int, help="Cap on training examples")
    train.add_argument("--validation-size", type=positive_int, default=10000)
    train.add_argument("--batch-size", type=positive_int, default=64)
    train.add_argument("--learning-rate", type=float, default=0.01)
    train.add_argument("--hidden-width", type=positive_int, default=1024)
    train.add_argument("--hidden-layers", type=non_negative_int, default=4)
    train.add_argument("--seed", type=non_negative_int, default=0)
    train.add_argument("--out", "-o", type=Path, help="Output directory")
    train.set_defaults(handler=bench_train_command)

    cost = subparsers.add_parser("costmodel", help="Micro-op totals of instruction listings")
    cost.add_argument("listings", nargs="*", type=Path, help="Listing files")
    cost.add_argument("--shipped", action="store_true", help="Use the shipped relu and tanh listings")
    cost.add_argument("--cost-table", type=Path, help="mnemonic,count CSV of cost overrides")
    cost.add_argument("--out", "-o", type=Path, help="Write a JSON report to this directory")
    cost.set_defaults(handler=costmodel_command)

    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    settings = configure_for_environment()
    config = load_config()
    level = "DEBUG" if args.verbose else (args.log_level or config.log_level or settings["log_level"])
    setup_logging(
        log_level=level,
        log_dir=args.log_dir or config.log_dir,
        enable_json=args.json_logs or settings["enable_json"],
        enable_console=settings["enable_console"],
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if not args.command:
        parser.print_help()
        return EXIT_OK

    try:
        _configure_logging(args)
        return args.handler(args)
    except KeyboardInterrupt:
        print("\nOperation cancelled by user", file=sys.stderr)
        return EXIT_ERROR
    except ActBenchError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        if e.user_message and e.user_message != e.message:
            print(e.user_message, file=sys.stderr)
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_ERROR
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
