"""Command line: ``viralapp validate|run|report``.

Exit status is 0 on success, 1 when a scenario fails validation and 2 for
any other failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .engine import run
from .errors import IncompatibleTraces, ParseError, ValidationError, ViralAppError
from .metrics import infection_csv, metrics, transfers_csv
from .scenario import load_scenario
from .trace import Trace

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
EMIT_CHOICES = ("trace", "summary", "infection", "transfers")


@dataclass(frozen=True)
class RunConfig:
    scenario_path: Path
    seeds: tuple[int, ...]
    out: Path
    emit: frozenset[str]

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ValueError("seed range is empty")
        unknown = self.emit - set(EMIT_CHOICES)
        if unknown:
            raise ValueError(f"unknown --emit value(s): {', '.join(sorted(unknown))}")


def parse_seed_range(text: str) -> tuple[int, ...]:
    """``"3"`` or an inclusive range ``"1..10"``."""
    lo, sep, hi = text.partition("..")
    try:
        start = int(lo)
        stop = int(hi) if sep else start
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed range {text!r}") from None
    if stop < start:
        raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
    return tuple(range(start, stop + 1))


def _print_errors(errors: Sequence[str]) -> None:
    for err in errors:
        print(f"error: {err}", file=sys.stderr)


def cmd_validate(path: Path) -> int:
    try:
        load_scenario(path)
    except ParseError as exc:
        _print_errors([str(exc)])
        return EXIT_INVALID
    except ValidationError as exc:
        _print_errors(exc.errors)
        return EXIT_INVALID
    print(f"ok: {path}")
    return EXIT_OK


def _write_summary(path: Path, flat: dict) -> None:
    path.write_text(json.dumps(flat, sort_keys=True, indent=2) + "\n")


def _format_table(flat: dict) -> str:
    width = max(map(len, flat), default=0)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in flat.items())


def cmd_run(config: RunConfig) -> int:
    try:
        scenario = load_scenario(config.scenario_path)
    except ParseError as exc:
        _print_errors([str(exc)])
        return EXIT_INVALID
    except ValidationError as exc:
        _print_errors(exc.errors)
        return EXIT_INVALID
    config.out.mkdir(parents=True, exist_ok=True)
    stem = config.scenario_path.stem
    outputs = []
    for seed in config.seeds:
        trace = run(scenario, seed)
        base = f"{stem}.seed{seed}"
        flat = metrics(trace).flat()
        if "trace" in config.emit:
            trace.write(config.out / f"{base}.trace.jsonl")
        if "summary" in config.emit:
            _write_summary(config.out / f"{base}.summary.json", flat)
        if "infection" in config.emit:
            (config.out / f"{base}.infection.csv").write_text(infection_csv(trace))
        if "transfers" in config.emit:
            (config.out / f"{base}.transfers.csv").write_text(transfers_csv(trace))
        outputs.append({"seed": seed, "trace_sha256": trace.digest()})
        print(f"# {stem} seed={seed}")
        print(_format_table({k: v for k, v in flat.items() if not k.startswith("strain.")}))
    manifest = {
        "tool": "viralapp",
        "version": __version__,
        "python": platform.python_version(),
        "scenario": str(config.scenario_path),
        "scenario_hash": scenario.source_hash,
        "emit": sorted(config.emit),
        "runs": outputs,
    }
    (config.out / f"{stem}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _percentile50(values: list[float]) -> float:
    return statistics.median(values)


def aggregate(traces: Sequence[Trace]) -> list[dict]:
    """Per-metric mean/min/max/p50 over numeric summary entries."""
    if not traces:
        raise ValueError("need at least one trace")
    hashes = {t.scenario_hash for t in traces}
    if len(hashes) > 1:
        raise IncompatibleTraces(f"traces come from {len(hashes)} different scenarios")
    flats = [metrics(t).flat() for t in traces]
    keys = sorted(set().union(*flats))
    rows = []
    for key in keys:
        values = [
            float(f[key]) for f in flats if isinstance(f.get(key), (int, float)) and not isinstance(f.get(key), bool)
        ]
        if not values:
            continue
        rows.append(
            {
                "metric": key,
                "n": len(values),
                "mean": round(statistics.fmean(values), 6),
                "min": min(values),
                "max": max(values),
                "p50": _percentile50(values),
            }
        )
    return rows


def report_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=("metric", "n", "mean", "min", "max", "p50"), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_report(paths: Sequence[Path], out: Optional[Path] = None) -> int:
    traces = [Trace.read(p) for p in paths]
    text = report_csv(aggregate(traces))
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="viralapp", description="Simulate self-compiling app spread.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("scenario", type=Path)

    p_run = sub.add_parser("run", help="run a scenario for one or more seeds")
    p_run.add_argument("scenario", type=Path)
    seeds = p_run.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, default=0)
    seeds.add_argument("--seeds", type=parse_seed_range, help="inclusive range A..B")
    p_run.add_argument("--out", type=Path, default=Path("out"))
    p_run.add_argument("--emit", default="trace,summary", help=f"comma list of {','.join(EMIT_CHOICES)}")

    p_rep = sub.add_parser("report", help="aggregate metrics over trace files")
    p_rep.add_argument("traces", type=Path, nargs="+")
    p_rep.add_argument("--out", type=Path, help="also write the CSV here")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "validate":
            return cmd_validate(args.scenario)
        if args.verb == "run":
            emit = frozenset(e.strip() for e in args.emit.split(",") if e.strip())
            config = RunConfig(args.scenario, args.seeds or (args.seed,), args.out, emit)
            return cmd_run(config)
        return cmd_report(args.traces, args.out)
    except (ViralAppError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
