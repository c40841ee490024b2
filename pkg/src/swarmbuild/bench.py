"""Robot-count sweeps producing the makespan CSV."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import IO, Iterable, Sequence

from .engine import SimConfig, run

CSV_FIELDS = ["shape", "robots", "trial", "makespan", "completed", "parallelism_index", "replans", "retargets"]


def _one(args: tuple[str, int, int, int]) -> dict:
    shape, robots, trial, max_ticks = args
    _, metrics, _ = run(SimConfig(shape, robots, seed=trial, max_ticks=max_ticks))
    return {
        "shape": Path(shape).stem,
        "robots": robots,
        "trial": trial,
        "makespan": metrics.makespan_ticks,
        "completed": metrics.completed,
        "parallelism_index": metrics.parallelism_index,
        "replans": metrics.replans_total,
        "retargets": metrics.retargets_total,
    }


def bench(
    shape: str,
    robot_counts: Sequence[int],
    trials: int = 1,
    jobs: int = 1,
    max_ticks: int = 100_000,
) -> list[dict]:
    """One row per (trial, robot count), in that order regardless of ``jobs``."""
    configs = [(str(shape), n, t, max_ticks) for t in range(trials) for n in robot_counts]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_one, configs))
    return [_one(c) for c in configs]


def write_csv(rows: Iterable[dict], fh: IO[str]) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
