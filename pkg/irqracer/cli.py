"""
Command-line entry point: detect, validate, repair, oracle and catalog
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from . import __version__
from .analysis.detector import WarningStatus
from .config import ToolConfig, load_config
from .errors import BudgetExceeded, IrqRacerError, ProgramCheckError
from .frontend import print_program
from .observability.structured_logging import configure_structured_logging, get_logger
from .pipeline import build_report, create_race_pipeline
from .pipeline.run import PipelineRun
from .repair.catalog import format_catalog
from .vm.validator import VerdictKind

EXIT_OK = 0
EXIT_RACES = 1
EXIT_ERROR = 2


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("file", help="IDL program")
    parser.add_argument("--json", dest="json_path", help="Write the JSON report here")
    parser.add_argument("--timeout", type=float, help="Symbolic budget per warning in seconds")
    parser.add_argument("--lmax", type=int, help="Loop unroll ceiling")
    parser.add_argument("--seed", type=int, help="RNG seed")
    parser.add_argument("--workers", type=int, help="Process pool size")
    parser.add_argument("--strategy", choices=["auto", "ide", "lock"], help="Repair strategy preference")
    parser.add_argument("--config", help="key = value configuration file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irqracer", description="Detect, validate and repair interrupt races in IDL programs",
    )
    parser.add_argument("--version", action="version", version=f"irqracer {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    _common(commands.add_parser("detect", help="Static race warnings"))
    _common(commands.add_parser("validate", help="Static warnings checked by symbolic search and replay"))
    repair = commands.add_parser("repair", help="Validate, then patch every confirmed race")
    _common(repair)
    repair.add_argument("--out", help="Write the patched program here")
    oracle = commands.add_parser("oracle", help="Exhaustive inputs x injection points")
    _common(oracle)
    oracle.add_argument("--budget", type=int, help="Maximum input assignments to enumerate")
    oracle.add_argument("--postpone", action="store_true", help="Keep a disabled request pending")
    commands.add_parser("catalog", help="Print the repair strategy catalog")
    return parser


def _config(args: argparse.Namespace) -> ToolConfig:
    return load_config(args.config, {
        "symbolic_timeout": args.timeout,
        "lmax": args.lmax,
        "seed": args.seed,
        "workers": args.workers,
        "repair_strategy": args.strategy,
        "oracle_budget": getattr(args, "budget", None),
    })


def _mark(record) -> str:
    if record.verdict is not None and record.verdict.kind is VerdictKind.DEADLOCK:
        return "🔒"
    return {
        WarningStatus.CONFIRMED: "🚨",
        WarningStatus.REFUTED_DYNAMIC: "✅",
        WarningStatus.INFEASIBLE: "✅",
    }.get(record.status, "⚠️")


def _print_summary(run: PipelineRun) -> None:
    print(f"\n🔍 {run.command}: {run.name}")
    for record in sorted(run.records, key=lambda r: r.warning.key):
        mark = _mark(record)
        extra = ""
        if record.verdict is not None and record.verdict.confirmed:
            extra = " (harmful)" if record.verdict.harmful else " (benign output)"
            if record.verdict.postponed:
                extra += " postponed"
        elif record.verdict is not None:
            extra = f" ({record.verdict.kind.value})"
        print(f"  {mark} {record.warning} {extra}".rstrip())
    counts = {}
    for record in run.records:
        counts[record.status.value] = counts.get(record.status.value, 0) + 1
    print(f"📊 {len(run.records)} warning(s): " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))

    if run.repair is not None:
        report = run.repair
        print(f"\n🔧 Repair: {report.status.value} after {report.iterations} round(s), "
              f"{report.inserted_operations} inserted operation(s)")
        for plan in report.plans:
            print(f"  • {plan.describe()}")
        for failure in report.surviving:
            print(f"  ❌ still failing: {failure}")
        if report.diff:
            print(report.diff, end="" if report.diff.endswith("\n") else "\n")
    if run.oracle is not None:
        print(f"\n🎯 Oracle: {len(run.oracle.races)} race(s), {len(run.oracle.deadlocks)} deadlock(s) over "
              f"{run.oracle.assignments} assignment(s)")
        for key in sorted(run.oracle.races):
            loc_i, loc_j, resource = key
            print(f"  🚨 {loc_i}->{loc_j}[{resource}]")
    for error in run.errors:
        print(f"❌ {error}")


def _exit_code(run: PipelineRun) -> int:
    if run.command == "detect":
        return EXIT_RACES if run.records else EXIT_OK
    if run.command == "validate":
        deadlocks = [r for r in run.records if r.verdict is not None and r.verdict.kind is VerdictKind.DEADLOCK]
        return EXIT_RACES if run.confirmed() or deadlocks else EXIT_OK
    if run.command == "oracle":
        return EXIT_RACES if run.oracle is not None and run.oracle.races else EXIT_OK
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_structured_logging()
    log = get_logger("irqracer.cli")

    if args.command == "catalog":
        print(format_catalog())
        return EXIT_OK

    try:
        config = _config(args)
        source = Path(args.file).read_text()
        pipeline = create_race_pipeline(config, "postpone" if getattr(args, "postpone", False) else "strict")
        run = pipeline.run_source(source, args.file, args.command)
    except ValidationError as e:
        print(f"❌ Invalid configuration: {e}", file=sys.stderr)
        return EXIT_ERROR
    except ProgramCheckError as e:
        for diagnostic in e.diagnostics:
            print(f"{args.file}: {diagnostic}", file=sys.stderr)
        return EXIT_ERROR
    except BudgetExceeded as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_ERROR
    except IrqRacerError as e:
        print(f"{args.file}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"❌ Cannot read {args.file}: {e}", file=sys.stderr)
        return EXIT_ERROR

    _print_summary(run)

    if args.command == "repair" and getattr(args, "out", None):
        patched = source if run.repair is None or run.patched is None else print_program(run.patched)
        Path(args.out).write_text(patched)
        print(f"💾 Patched program written to {args.out}")

    if args.json_path:
        Path(args.json_path).write_text(build_report(run).to_json())
        log.info("Report written", event_type="report", path=args.json_path, command=args.command)

    return _exit_code(run)


if __name__ == "__main__":
    sys.exit(main())
