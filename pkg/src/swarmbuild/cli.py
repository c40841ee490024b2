"""Command line: run, render, validate, bench."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bench import bench, write_csv
from .engine import SimConfig, simulate
from .render import render_frames
from .shapefile import ShapeFileError, format_shape, load_scenario, read_shape_text
from .trace import TraceFormatError, make_header, read_trace, write_trace
from .validate import validate_trace

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _failure(text: str) -> tuple[int, int]:
    robot, sep, tick = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected ROBOT:TICK, got {text!r}")
    try:
        return int(robot), int(tick)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROBOT:TICK, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("robot counts must be >= 1")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmbuild", description="Swarm construction simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    p.add_argument("--shape", required=True, help="scenario file or bundled name")
    p.add_argument("--robots", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--stuck-threshold", type=int, default=50)
    p.add_argument("--max-ticks", type=int, default=100_000)
    p.add_argument("--fail", type=_failure, action="append", default=[], metavar="ROBOT:TICK")
    p.add_argument("--trace", type=Path, help="write the JSONL trace here")
    p.add_argument("--metrics", type=Path, help="write metrics JSON here")

    p = sub.add_parser("render", help="write PPM frames from a trace")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--every", type=int, default=0, help="tick stride; 0 keeps first and last only")
    p.add_argument("--scale", type=int, default=8, help="pixels per cell")

    p = sub.add_parser("validate", help="replay a trace and check invariants")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--shape", required=True)

    p = sub.add_parser("bench", help="sweep robot counts")
    p.add_argument("--shape", required=True)
    p.add_argument("--robots", type=_int_list, default=[1, 2, 4, 8], metavar="LIST")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", type=Path)
    return parser


def _cmd_run(args) -> int:
    config = SimConfig(
        shape_file=args.shape,
        robot_count=args.robots,
        sensor_radius=args.radius,
        stuck_threshold=args.stuck_threshold,
        max_ticks=args.max_ticks,
        seed=args.seed,
        failure_injections=args.fail,
    )
    scenario = load_scenario(args.shape)
    sim, metrics = simulate(config, scenario)
    if args.trace:
        header = make_header(config.to_dict(), format_shape(scenario), sim.spawns)
        write_trace(sim.trace, args.trace, header)
    if args.metrics:
        args.metrics.write_text(json.dumps(metrics.to_dict(), indent=2, sort_keys=True) + "\n")
    print(
        f"{Path(args.shape).stem}: robots={config.robot_count} completed={metrics.completed} "
        f"makespan={metrics.makespan_ticks} parallelism={metrics.parallelism_index} "
        f"stuck={len(metrics.stuck_robots)}"
    )
    return EXIT_OK if metrics.completed else EXIT_FAILED


def _cmd_render(args) -> int:
    trace = read_trace(args.trace)
    frames = render_frames(trace, args.out_dir, args.every, scale=args.scale)
    print(f"wrote {len(frames)} frames to {args.out_dir}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        trace = read_trace(args.trace)
    except TraceFormatError as exc:
        print(f"FAIL structure: {exc}")
        return EXIT_FAILED
    report = validate_trace(trace, read_shape_text(args.shape))
    print(report.format())
    return EXIT_OK if report.ok else EXIT_FAILED


def _cmd_bench(args) -> int:
    rows = bench(args.shape, args.robots, args.trials, args.jobs)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    return EXIT_OK if all(r["completed"] for r in rows) else EXIT_FAILED


COMMANDS = {"run": _cmd_run, "render": _cmd_render, "validate": _cmd_validate, "bench": _cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, ShapeFileError, TraceFormatError, ValueError) as exc:
        print(f"swarmbuild {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
