"""End-to-end acceptance criteria, one test per criterion.

Each test records its outcome so the terminal summary shows a single
PASS/FAIL line per criterion.
"""

from __future__ import annotations

import functools
import io
import random
import statistics
import time
from types import SimpleNamespace

import pytest

from conftest import ACCEPTANCE, recorded, scenario_text
from oracles import bfs_distance, bfs_region, make_grid, nearest_member, random_instance, sealed_after_oracle, trapped_oracle
from swarmbuild.bench import bench, write_csv
from swarmbuild.engine import SimConfig, TraceEvent, run, simulate
from swarmbuild.grid import GridView, Shape, free_region, unreachable_empty_after, would_trap_robot
from swarmbuild.pathing import plan_path
from swarmbuild.shapefile import load_scenario
from swarmbuild.trace import Trace, dumps_trace, make_header
from swarmbuild.validate import validate_trace

SUITE = ["square5", "disc9", "ushape7", "pentagram"]
ROBOTS = [1, 2, 4, 8]
INSTANCES = 1000


def criterion(n: int, text: str):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                ACCEPTANCE[n] = (text, False)
                print(f"criterion {n}: FAIL  {text}")
                raise
            ACCEPTANCE[n] = (text, True)
            print(f"criterion {n}: PASS  {text}")

        return inner

    return wrap


@functools.lru_cache(maxsize=None)
def suite_run(shape: str, robots: int):
    start = time.perf_counter()
    sim, metrics = simulate(SimConfig(shape, robots))
    return sim, metrics, time.perf_counter() - start


def placed_sets(events):
    """Block set after every drop, in order."""
    blocks: set = set()
    for e in events:
        if e.kind == "drop":
            blocks.add(e.cell)
            yield e, blocks


def connected(cells) -> bool:
    cells = set(cells)
    if not cells:
        return True
    start = next(iter(cells))
    seen = {start}
    todo = [start]
    while todo:
        r, c = todo.pop()
        for n in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
            if n in cells and n not in seen:
                seen.add(n)
                todo.append(n)
    return seen == cells


@criterion(1, "suite x {1,2,4,8} robots completes exactly, nothing outside, no stuck robots, each run < 10 s")
def test_criterion_1_completion():
    problems = []
    for shape in SUITE:
        cells = load_scenario(shape).shape.cells
        for n in ROBOTS:
            sim, m, secs = suite_run(shape, n)
            if not m.completed or sim.world.blocks != set(cells):
                problems.append(f"{shape}/{n}: incomplete ({len(sim.world.blocks)}/{len(cells)})")
            if sim.world.blocks - cells:
                problems.append(f"{shape}/{n}: blocks outside shape")
            if m.stuck_robots:
                problems.append(f"{shape}/{n}: stuck {m.stuck_robots}")
            if secs >= 10:
                problems.append(f"{shape}/{n}: {secs:.1f}s")
    assert not problems, problems


@criterion(2, "first drop at centroid and placed set 4-connected after every drop")
def test_criterion_2_centroid_out():
    for shape in SUITE:
        center = nearest_member(load_scenario(shape).shape.cells)
        for n in ROBOTS:
            sim, _, _ = suite_run(shape, n)
            drops = [e for e in sim.trace if e.kind == "drop"]
            assert drops[0].cell == center, (shape, n)
            for e, blocks in placed_sets(sim.trace):
                assert connected(blocks), (shape, n, e.tick)
            trace = recorded(shape, n)
            report = validate_trace(trace, scenario_text(shape))
            assert report.checks["first drop at centroid"].passed
            assert report.checks["connected growth"].passed


@criterion(3, "no empty shape cell is sealed off after any drop")
def test_criterion_3_no_sealed_holes():
    for shape in SUITE:
        sc = load_scenario(shape)
        h, w = sc.shape.height, sc.shape.width
        outside = [(r, c) for r in range(h) for c in range(w) if (r, c) not in sc.shape.cells and (r, c) not in sc.factories]
        for n in ROBOTS:
            sim, _, _ = suite_run(shape, n)
            for e, blocks in placed_sets(sim.trace):
                grid = make_grid(h, w, blocks, sc.factories)
                reach: set = set()
                for cell in outside:
                    if cell not in reach:
                        reach |= bfs_region(grid, cell)
                empty = sc.shape.cells - blocks
                assert empty <= reach, (shape, n, e.tick, sorted(empty - reach)[:3])
            report = validate_trace(recorded(shape, n), scenario_text(shape))
            assert report.checks["no sealed holes"].passed


def drop_windows(events, window=50):
    drops = [e for e in events if e.kind == "drop"]
    span = drops[-1].tick + 1
    lo, hi = span // 3, 2 * span // 3
    counts = []
    for start in range(lo, hi - window + 1):
        counts.append(len({e.robot_id for e in drops if start <= e.tick < start + window}))
    return counts, (lo, hi)


@criterion(4, "pentagram, 8 robots: every 50-tick mid-run window has >= 2 droppers, parallelism_index >= 2")
def test_criterion_4_parallelism():
    sim, m, _ = suite_run("pentagram", 8)
    counts, (lo, hi) = drop_windows(sim.trace)
    assert counts, "middle third shorter than one window"
    assert min(counts) >= 2, min(counts)
    # independent recount of robots carrying a block at the end of each tick
    holding: set = set()
    per_tick = []
    events = iter(sim.trace)
    e = next(events, None)
    for t in range(hi):
        while e is not None and e.tick == t:
            if e.kind == "load":
                holding.add(e.robot_id)
            elif e.kind in ("drop", "fail_injected"):
                holding.discard(e.robot_id)
            e = next(events, None)
        per_tick.append(len(holding))
    assert statistics.median(per_tick[lo:hi]) == m.parallelism_index
    assert m.parallelism_index >= 2


@criterion(5, "makespan(4) < makespan(1) on every suite shape with >= 100 cells; bench CSV reported")
def test_criterion_5_speedup():
    big = [s for s in SUITE + ["disc15"] if len(load_scenario(s).shape) >= 100]
    assert "pentagram" in big
    for shape in big:
        rows = bench(shape, ROBOTS)
        buf = io.StringIO()
        write_csv(rows, buf)
        print(buf.getvalue())
        span = {r["robots"]: r["makespan"] for r in rows}
        assert all(r["completed"] for r in rows)
        assert span[4] < span[1], (shape, span)


@criterion(6, "removing half the robots mid-run on pentagram/4 still completes, makespan not shorter")
def test_criterion_6_redundancy():
    _, base, _ = suite_run("pentagram", 4)
    mid = base.makespan_ticks // 2
    sim, m = simulate(SimConfig("pentagram", 4, failure_injections=[(2, mid), (3, mid)]))
    assert sum(e.kind == "fail_injected" for e in sim.trace) == 2
    assert m.completed
    assert m.makespan_ticks >= base.makespan_ticks


def _oracle_instances():
    rng = random.Random(20240611)
    for _ in range(INSTANCES):
        yield rng, random_instance(rng)


@criterion(7, f"grid queries and plan_path agree with brute-force oracles on {INSTANCES} random instances each")
def test_criterion_7_oracles():
    counts = dict(region=0, trap=0, seal=0, path=0)
    positives = dict(trap=0, seal=0, path=0)
    for rng, (h, w, blocks, factories, robots, shape_cells) in _oracle_instances():
        robot_map = {p: i for i, p in enumerate(sorted(robots))}
        view = GridView(w, h, frozenset(blocks), frozenset(factories), robot_map)
        grid = make_grid(h, w, blocks, factories, robots)
        shape = Shape(frozenset(shape_cells), w, h)
        free = sorted((r, c) for r in range(h) for c in range(w) if (r, c) not in blocks and (r, c) not in factories)
        empty = [x for x in free if x not in robots]

        start = rng.choice(free)
        mode = "blocked" if start not in robots and rng.random() < 0.5 else "free"
        assert free_region(view, start, mode) == bfs_region(grid, start, robots_block=mode == "blocked")
        counts["region"] += 1

        drop = rng.choice(empty)
        robot = rng.choice(sorted(robots))
        got = would_trap_robot(view, drop, robot, shape)
        assert got == trapped_oracle(grid, drop, robot, shape_cells)
        counts["trap"] += 1
        positives["trap"] += got

        got = unreachable_empty_after(view, drop, shape)
        assert got == sealed_after_oracle(grid, drop, shape_cells)
        counts["seal"] += 1
        positives["seal"] += got is not None

        a, b = rng.sample(empty, 2)
        grid_map = SimpleNamespace(height=h, width=w, blocks=blocks, factories=factories)
        path = plan_path(grid_map, a, b, frozenset(robots))
        expected = bfs_distance(grid, a, b, frozenset(robots))
        if expected is None:
            assert path is None
        else:
            assert len(path) == expected
            prev = a
            for cell in path:
                assert abs(cell[0] - prev[0]) + abs(cell[1] - prev[1]) == 1
                assert grid[cell[0]][cell[1]] == "."
                prev = cell
            assert prev == b
            positives["path"] += 1
        counts["path"] += 1
    assert min(counts.values()) >= 1000, counts
    # the generator must exercise both outcomes, not just the easy one
    assert all(0 < v < INSTANCES for v in positives.values()), positives


def _mutations():
    trace = recorded("pentagram", 4)
    events = trace.events
    out = {}

    i = next(i for i, e in enumerate(events) if e.kind == "drop" and i > 200)
    out["out-of-shape drop"] = [*events[:i], TraceEvent(events[i].tick, events[i].robot_id, "drop", (0, 20)), *events[i + 1 :]]

    i = next(i for i, e in enumerate(events) if e.kind == "move")
    e = events[i]
    out["teleport"] = [*events[:i], TraceEvent(e.tick, e.robot_id, "move", (e.cell[0] + 3, e.cell[1])), *events[i + 1 :]]

    # grow around (2,2) until it is walled in while still empty
    text = "F......\n.#####.\n.#####.\n.#####.\n.......\n"
    ev = [TraceEvent(0, 0, "load", (0, 0))]
    tick = 0
    seq = [(2, 3), (1, 3), (1, 2), (1, 1), (2, 1), (3, 1), (3, 2), (3, 3), (3, 4), (2, 4), (1, 4)]
    for k, cell in enumerate(seq):
        if k:
            tick += 1
            ev.append(TraceEvent(tick, 0, "load", (0, 0)))
        tick += 1
        ev.append(TraceEvent(tick, 0, "drop", cell))
    return trace, out, (text, ev)


@criterion(8, "identical configs give byte-identical traces; validator passes engine traces, fails 3 mutations")
def test_criterion_8_determinism_and_replay():
    for shape, n in (("pentagram", 8), ("ushape7", 4)):
        config = SimConfig(shape, n, failure_injections=[(1, 40)])
        a, b = run(config), run(SimConfig(shape, n, failure_injections=[(1, 40)]))
        header = make_header(config.to_dict(), scenario_text(shape), {})
        assert dumps_trace(a.trace, header) == dumps_trace(b.trace, header)

    for shape in SUITE:
        for n in ROBOTS:
            report = validate_trace(recorded(shape, n), scenario_text(shape))
            assert report.ok, (shape, n, report.failed())

    trace, mutations, (text, ring_events) = _mutations()
    report = validate_trace(Trace(trace.header, mutations["out-of-shape drop"]), scenario_text("pentagram"))
    assert "blocks within shape" in report.failed()
    report = validate_trace(Trace(trace.header, mutations["teleport"]), scenario_text("pentagram"))
    assert "legal moves" in report.failed()
    sealed = Trace(make_header({}, text, {0: (0, 1)}), ring_events)
    report = validate_trace(sealed, text)
    assert "no sealed holes" in report.failed()
    assert "(2, 2)" in report.checks["no sealed holes"].message


@pytest.mark.parametrize("shape", SUITE)
def test_suite_traces_validate_cleanly(shape):
    # per-shape detail behind criterion 8, useful when it fails
    for n in ROBOTS:
        assert validate_trace(recorded(shape, n), scenario_text(shape)).ok
