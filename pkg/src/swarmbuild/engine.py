"""Synchronous tick loop, failure injection and run metrics."""

from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

from .agent import (
    DEFAULT_SENSOR_RADIUS,
    DEFAULT_STUCK_THRESHOLD,
    Action,
    ActionKind,
    LocalMap,
    Phase,
    Robot,
    decide,
    sense,
)
from .grid import Cell, GridWorld, Shape, adjacent
from .shapefile import Scenario, load_scenario

log = logging.getLogger(__name__)

EVENT_KINDS = (
    "move",
    "load",
    "drop",
    "replan",
    "retarget",
    "wait",
    "finish",
    "stuck",
    "fail_injected",
)


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    robot_id: int
    kind: str
    cell: Optional[Cell] = None
    detail: str = ""


@dataclass
class SimConfig:
    shape_file: str
    robot_count: int
    spawn_cells: Optional[list[Cell]] = None
    sensor_radius: int = DEFAULT_SENSOR_RADIUS
    stuck_threshold: int = DEFAULT_STUCK_THRESHOLD
    max_ticks: int = 100_000
    seed: int = 0
    failure_injections: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.robot_count < 1:
            raise ValueError("robot_count must be >= 1")
        if self.sensor_radius < 1:
            raise ValueError("sensor_radius must be >= 1")
        if self.stuck_threshold < 1:
            raise ValueError("stuck_threshold must be >= 1")
        if self.max_ticks < 1:
            raise ValueError("max_ticks must be >= 1")
        self.shape_file = str(self.shape_file)
        if self.spawn_cells is not None:
            self.spawn_cells = [tuple(c) for c in self.spawn_cells]
        self.failure_injections = [(int(r), int(t)) for r, t in self.failure_injections]

    def to_dict(self) -> dict:
        return {
            "shape_file": Path(self.shape_file).name,
            "robot_count": self.robot_count,
            "spawn_cells": [list(c) for c in self.spawn_cells] if self.spawn_cells else None,
            "sensor_radius": self.sensor_radius,
            "stuck_threshold": self.stuck_threshold,
            "max_ticks": self.max_ticks,
            "seed": self.seed,
            "failure_injections": [list(f) for f in self.failure_injections],
        }


@dataclass
class Metrics:
    makespan_ticks: int
    blocks_per_robot: dict[int, int]
    replans_total: int
    retargets_total: int
    distance_per_robot: dict[int, int]
    parallelism_index: float
    completed: bool
    stuck_robots: list[int] = field(default_factory=list)
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {
            "makespan_ticks": self.makespan_ticks,
            "blocks_per_robot": {str(k): v for k, v in sorted(self.blocks_per_robot.items())},
            "replans_total": self.replans_total,
            "retargets_total": self.retargets_total,
            "distance_per_robot": {str(k): v for k, v in sorted(self.distance_per_robot.items())},
            "parallelism_index": self.parallelism_index,
            "completed": self.completed,
            "stuck_robots": self.stuck_robots,
            "diagnostic": self.diagnostic,
        }


def spawn_cells_for(scenario: Scenario, count: int, preferred: Sequence[Cell] = ()) -> list[Cell]:
    """Deterministic start cells: given ones first, then nearest to each factory in turn."""
    shape = scenario.shape
    taken: list[Cell] = []
    for cell in preferred:
        if len(taken) == count:
            break
        if cell in shape.cells or cell in scenario.factories or cell in taken:
            raise ValueError(f"spawn cell {cell} is not a free non-shape cell")
        taken.append(tuple(cell))
    free = [
        (r, c)
        for r in range(shape.height)
        for c in range(shape.width)
        if (r, c) not in shape.cells and (r, c) not in scenario.factories
    ]
    if count > len(free):
        raise ValueError(f"{count} robots do not fit in {len(free)} free non-shape cells")
    factories = sorted(scenario.factories)
    i = 0
    while len(taken) < count:
        f = factories[i % len(factories)]
        options = [c for c in free if c not in taken]
        taken.append(min(options, key=lambda c: ((c[0] - f[0]) ** 2 + (c[1] - f[1]) ** 2, c)))
        i += 1
    return taken


class Simulation:
    """One deterministic run.

    Robots act one at a time in ascending id order; each senses the world as
    left by the robots before it in the same tick.
    """

    def __init__(
        self,
        world: GridWorld,
        robots: list[Robot],
        *,
        sensor_radius: int = DEFAULT_SENSOR_RADIUS,
        stuck_threshold: int = DEFAULT_STUCK_THRESHOLD,
    ):
        self.world = world
        self.robots = {r.id: r for r in sorted(robots, key=lambda r: r.id)}
        self.removed: set[int] = set()
        self.sensor_radius = sensor_radius
        self.stuck_threshold = stuck_threshold
        self.tick_index = 0
        self.trace: list[TraceEvent] = []
        self.failures: dict[int, list[int]] = {}
        self.spawns = {r.id: r.pos for r in robots}
        for r in robots:
            world.robot_positions[r.id] = r.pos

    @classmethod
    def from_scenario(
        cls,
        scenario: Scenario,
        robot_count: int,
        *,
        spawn_cells: Sequence[Cell] = (),
        sensor_radius: int = DEFAULT_SENSOR_RADIUS,
        stuck_threshold: int = DEFAULT_STUCK_THRESHOLD,
    ) -> Simulation:
        shape = scenario.shape
        world = GridWorld(shape.width, shape.height, shape, scenario.factories)
        preferred = list(spawn_cells) or sorted(scenario.spawns)
        robots = [
            Robot(i, pos, LocalMap(shape.width, shape.height, shape.cells, frozenset(scenario.factories)))
            for i, pos in enumerate(spawn_cells_for(scenario, robot_count, preferred))
        ]
        return cls(world, robots, sensor_radius=sensor_radius, stuck_threshold=stuck_threshold)

    @property
    def shape(self) -> Shape:
        return self.world.shape

    def active_robots(self) -> list[Robot]:
        return [r for rid, r in self.robots.items() if rid not in self.removed and r.active]

    def done(self) -> bool:
        return not self.active_robots()

    def inject_failure(self, robot_id: int, tick: int) -> None:
        """Schedule removal of a robot at the start of ``tick``."""
        if robot_id not in self.robots:
            raise KeyError(f"unknown robot {robot_id}")
        if robot_id in self.removed or any(robot_id in ids for ids in self.failures.values()):
            raise ValueError(f"robot {robot_id} already removed")
        self.failures.setdefault(tick, []).append(robot_id)

    def _remove(self, robot_id: int) -> TraceEvent:
        robot = self.robots[robot_id]
        self.removed.add(robot_id)
        del self.world.robot_positions[robot_id]
        detail = "carrying" if robot.has_block else ""
        robot.has_block = False
        return TraceEvent(self.tick_index, robot_id, "fail_injected", robot.pos, detail)

    def step(self) -> list[TraceEvent]:
        """Advance one tick and return its events ordered by robot id."""
        tick = self.tick_index
        events = [
            self._remove(rid)
            for rid in sorted(self.failures.pop(tick, []))
            if rid not in self.removed
        ]
        for robot in self.active_robots():
            sensed = sense(self.world, robot, self.sensor_radius, tick)
            action = decide(
                robot,
                sensed,
                self.shape,
                radius=self.sensor_radius,
                stuck_threshold=self.stuck_threshold,
            )
            events.extend(self.apply(robot, action))
        events.sort(key=lambda e: e.robot_id)
        self.trace.extend(events)
        self.tick_index += 1
        return events

    def apply(self, robot: Robot, action: Action) -> list[TraceEvent]:
        tick = self.tick_index
        world = self.world
        out = []

        def emit(kind: str, cell: Optional[Cell] = None, detail: str = "") -> None:
            out.append(TraceEvent(tick, robot.id, kind, cell, detail))

        kind = action.kind
        if kind is ActionKind.LOAD:
            assert not robot.has_block and adjacent(robot.pos, action.cell)
            assert action.cell in world.factories
            robot.phase = Phase.LOADING
            emit("load", action.cell)
            robot.has_block = True
            robot.phase = Phase.TO_DROP
            robot.stall_ticks = 0
        if action.target is not None:
            assert action.target in self.shape.cells
            robot.target = action.target
            emit("retarget", action.target, action.reason)
        if action.path is not None:
            robot.path = list(action.path)
            emit("replan", robot.path[-1] if robot.path else None, action.detail or f"len={len(robot.path)}")

        if kind is ActionKind.MOVE:
            cell = action.cell
            assert adjacent(robot.pos, cell), f"robot {robot.id} move {robot.pos}->{cell}"
            occupied = (
                cell in world.blocks
                or cell in world.factories
                or cell in world.robot_positions.values()
                or not world.in_bounds(cell)
            )
            if occupied:
                robot.path = None
                robot.stall_ticks += 1
                emit("replan", None, "denied")
                emit("wait", None, "denied")
            else:
                robot.pos = cell
                world.robot_positions[robot.id] = cell
                if robot.path and robot.path[0] == cell:
                    robot.path.pop(0)
                else:
                    robot.path = None
                robot.stall_ticks = 0
                emit("move", cell, action.detail)
        elif kind is ActionKind.DROP:
            cell = action.cell
            assert robot.has_block and adjacent(robot.pos, cell)
            assert cell in self.shape.cells and cell not in world.blocks
            assert cell not in world.robot_positions.values()
            world.blocks.add(cell)
            robot.local_map.observe(cell, True, tick)
            robot.has_block = False
            robot.phase = Phase.TO_FACTORY
            robot.target = None
            robot.path = None
            if action.memory is not None:
                robot.memory = replace(action.memory, recorded_tick=tick)
            robot.stall_ticks = 0
            emit("drop", cell)
        elif kind in (ActionKind.WAIT, ActionKind.REPLAN):
            robot.stall_ticks += 1
            if kind is ActionKind.WAIT:
                emit("wait", None, action.detail)
        elif kind is ActionKind.FINISH:
            robot.phase = Phase.FINISHED
            robot.path = None
            emit("finish", robot.pos)
        elif kind is ActionKind.STUCK:
            robot.phase = Phase.STUCK
            robot.path = None
            emit("stuck", robot.pos, f"stalled {robot.stall_ticks}")
        return out

    def run(self, max_ticks: int = 100_000) -> list[TraceEvent]:
        while not self.done() and self.tick_index < max_ticks:
            self.step()
        return self.trace

    def completed(self) -> bool:
        return self.world.blocks == set(self.shape.cells)


class RunResult(NamedTuple):
    trace: list[TraceEvent]
    metrics: Metrics
    final_world: GridWorld


def build_simulation(config: SimConfig, scenario: Optional[Scenario] = None) -> Simulation:
    scenario = scenario or load_scenario(config.shape_file)
    sim = Simulation.from_scenario(
        scenario,
        config.robot_count,
        spawn_cells=config.spawn_cells or (),
        sensor_radius=config.sensor_radius,
        stuck_threshold=config.stuck_threshold,
    )
    for robot_id, tick in config.failure_injections:
        sim.inject_failure(robot_id, tick)
    return sim


def simulate(config: SimConfig, scenario: Optional[Scenario] = None) -> tuple[Simulation, Metrics]:
    """Run ``config`` to termination and return the finished simulation and its metrics."""
    sim = build_simulation(config, scenario)
    sim.run(config.max_ticks)
    metrics = compute_metrics(sim.trace, len(sim.shape), sim.tick_index)
    metrics.completed = sim.completed()
    metrics.stuck_robots = sorted(r.id for r in sim.robots.values() if r.phase is Phase.STUCK)
    if not sim.done():
        metrics.diagnostic = (
            f"max_ticks {config.max_ticks} reached with {len(sim.world.blocks)}/{len(sim.shape)} blocks"
        )
        log.warning(metrics.diagnostic)
    elif not metrics.completed:
        metrics.diagnostic = f"swarm halted with {len(sim.world.blocks)}/{len(sim.shape)} blocks"
    return sim, metrics


def run(config: SimConfig) -> RunResult:
    sim, metrics = simulate(config)
    return RunResult(sim.trace, metrics, sim.world)


def construction_span(trace: Sequence[TraceEvent]) -> int:
    """Ticks from start through the last drop."""
    drops = [e.tick for e in trace if e.kind == "drop"]
    return drops[-1] + 1 if drops else 0


def middle_third(span: int) -> range:
    return range(span // 3, (2 * span) // 3)


def carrying_counts(trace: Sequence[TraceEvent], ticks: int) -> list[int]:
    """Robots holding a block at the end of each tick."""
    holding: set[int] = set()
    counts = []
    i = 0
    for t in range(ticks):
        while i < len(trace) and trace[i].tick == t:
            e = trace[i]
            if e.kind == "load":
                holding.add(e.robot_id)
            elif e.kind in ("drop", "fail_injected"):
                holding.discard(e.robot_id)
            i += 1
        counts.append(len(holding))
    return counts


def drop_window_diversity(trace: Sequence[TraceEvent], window: int = 50) -> Optional[int]:
    """Fewest distinct droppers over every ``window``-tick slice of the middle third.

    None when the middle third is shorter than one window.
    """
    mid = middle_third(construction_span(trace))
    if len(mid) < window:
        return None
    droppers: dict[int, list[int]] = {}
    for e in trace:
        if e.kind == "drop":
            droppers.setdefault(e.tick, []).append(e.robot_id)
    fewest = None
    for start in range(mid.start, mid.stop - window + 1):
        ids = {rid for t in range(start, start + window) for rid in droppers.get(t, ())}
        fewest = len(ids) if fewest is None else min(fewest, len(ids))
    return fewest


def compute_metrics(trace: Sequence[TraceEvent], shape_size: int, makespan: int) -> Metrics:
    blocks: dict[int, int] = {}
    distance: dict[int, int] = {}
    robots = set()
    for e in trace:
        robots.add(e.robot_id)
        if e.kind == "drop":
            blocks[e.robot_id] = blocks.get(e.robot_id, 0) + 1
        elif e.kind == "move":
            distance[e.robot_id] = distance.get(e.robot_id, 0) + 1
    span = construction_span(trace)
    counts = carrying_counts(trace, span)
    mid = middle_third(span)
    parallelism = float(statistics.median(counts[t] for t in mid)) if len(mid) else 0.0
    return Metrics(
        makespan_ticks=makespan,
        blocks_per_robot={rid: blocks.get(rid, 0) for rid in sorted(robots)},
        replans_total=sum(e.kind == "replan" for e in trace),
        retargets_total=sum(e.kind == "retarget" for e in trace),
        distance_per_robot={rid: distance.get(rid, 0) for rid in sorted(robots)},
        parallelism_index=parallelism,
        completed=sum(blocks.values()) == shape_size,
    )
