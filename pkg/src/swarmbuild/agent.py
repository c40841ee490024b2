"""Robot state, local sensing and the per-robot controller.

Robots never read each other's state. Everything a robot knows about blocks
comes from its own sensing, so placed blocks are the only channel between
robots.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .grid import (
    Cell,
    GridView,
    GridWorld,
    Shape,
    adjacent,
    closest,
    free_region,
    neighbors4,
    occupied_neighbor_count,
    sealed_cells,
    unreachable_empty_after,
    would_trap_robot,
)
from .pathing import nearest_goal, path_blocked, plan_path
from .placement import CandidateMemory, NoKnownFrontier, next_drop_position, remember_candidates

DEFAULT_SENSOR_RADIUS = 2
DEFAULT_STUCK_THRESHOLD = 50
# consecutive idle ticks before a blocked robot steps aside
YIELD_AFTER = 3


class Phase(str, enum.Enum):
    TO_FACTORY = "to_factory"
    LOADING = "loading"
    TO_DROP = "to_drop"
    FINISHED = "finished"
    STUCK = "stuck"


class ActionKind(str, enum.Enum):
    MOVE = "move"
    LOAD = "load"
    DROP = "drop"
    REPLAN = "replan"
    WAIT = "wait"
    FINISH = "finish"
    STUCK = "stuck"


@dataclass
class LocalMap:
    """A robot's private belief about the grid.

    Shape and factory cells are known from the start. Cells never sensed are
    unknown and treated as free by every consumer. ``blocks`` is everything
    believed filled: blocks seen directly plus shape cells deduced filled
    because the map shows them walled in (the swarm never leaves an empty
    cell enclosed, so such a cell cannot still be empty).
    """

    width: int
    height: int
    shape_cells: frozenset[Cell]
    factories: frozenset[Cell]
    blocks: set[Cell] = field(default_factory=set)
    sensed_blocks: set[Cell] = field(default_factory=set)
    inferred: set[Cell] = field(default_factory=set)
    last_seen: dict[Cell, int] = field(default_factory=dict)

    def belief(self, cell: Cell) -> str:
        if cell in self.blocks:
            return "block"
        return "free" if cell in self.last_seen else "unknown"

    def observe(self, cell: Cell, is_block: bool, tick: int) -> None:
        if is_block:
            self.sensed_blocks.add(cell)
            self.blocks.add(cell)
        elif cell in self.blocks:
            self.sensed_blocks.discard(cell)
            self.inferred.discard(cell)
            self.blocks.discard(cell)
        self.last_seen[cell] = tick

    def infer_enclosed(self) -> int:
        """Mark walled-in shape cells as filled; returns how many were added."""
        if self.is_complete():
            return 0
        view = GridView(self.width, self.height, frozenset(self.blocks), self.factories)
        shape = Shape(self.shape_cells, self.width, self.height)
        enclosed = sealed_cells(view, shape)
        self.inferred |= enclosed
        self.blocks |= enclosed
        return len(enclosed)

    def is_complete(self) -> bool:
        return self.shape_cells <= self.blocks

    def docking_cells(self, extra_blocks: frozenset[Cell] = frozenset()) -> set[Cell]:
        out = set()
        for f in self.factories:
            for cell in neighbors4(f, self.width, self.height):
                if cell not in self.factories and cell not in self.blocks and cell not in extra_blocks:
                    out.add(cell)
        return out


@dataclass
class Robot:
    id: int
    pos: Cell
    local_map: LocalMap
    phase: Phase = Phase.TO_FACTORY
    has_block: bool = False
    path: Optional[list[Cell]] = None
    target: Optional[Cell] = None
    memory: CandidateMemory = field(default_factory=CandidateMemory)
    stall_ticks: int = 0

    @property
    def active(self) -> bool:
        return self.phase not in (Phase.FINISHED, Phase.STUCK)


@dataclass(frozen=True)
class Action:
    """One controller decision.

    ``target`` and ``path`` are plan updates applied before the physical
    action; ``None`` leaves the current plan alone.
    """

    kind: ActionKind
    cell: Optional[Cell] = None
    target: Optional[Cell] = None
    reason: str = ""
    path: Optional[tuple[Cell, ...]] = None
    memory: Optional[CandidateMemory] = None
    detail: str = ""


def sense(world: GridWorld, robot: Robot, radius: int, tick: int) -> dict[Cell, int]:
    """Write the true Block/Free state of the window into the robot's map.

    Returns the positions of other robots in the window; those are never
    stored in the map.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    r0, c0 = robot.pos
    seen_robots = {}
    positions = {pos: rid for rid, pos in world.robot_positions.items() if rid != robot.id}
    for r in range(max(0, r0 - radius), min(world.height, r0 + radius + 1)):
        for c in range(max(0, c0 - radius), min(world.width, c0 + radius + 1)):
            cell = (r, c)
            robot.local_map.observe(cell, cell in world.blocks, tick)
            if cell in positions:
                seen_robots[cell] = positions[cell]
    return seen_robots


def self_preservation_check(
    robot: Robot, drop: Cell, shape: Shape, sensed_robots: Mapping[Cell, int] = {}
) -> bool:
    """Can the robot still reach a factory docking cell after dropping here?"""
    lm = robot.local_map
    view = GridView(
        lm.width,
        lm.height,
        frozenset(lm.blocks) | {drop},
        lm.factories,
        {**sensed_robots, robot.pos: robot.id},
    )
    docks = lm.docking_cells(frozenset({drop}))
    if robot.pos in docks:
        return True
    return bool(free_region(view, robot.pos, "free") & docks)


def _plan(robot: Robot, goal: Cell, sensed: Mapping[Cell, int]) -> Optional[list[Cell]]:
    lm = robot.local_map
    path = plan_path(lm, robot.pos, goal, frozenset(sensed))
    if path is None:
        # robots are transient; fall back to a route through them and wait it out
        path = plan_path(lm, robot.pos, goal)
    return path


def _sidestep(robot: Robot, sensed: Mapping[Cell, int], blocker: Cell) -> Optional[Cell]:
    lm = robot.local_map
    options = [
        cell
        for cell in neighbors4(robot.pos, lm.width, lm.height)
        if cell not in lm.blocks and cell not in lm.factories and cell not in sensed
    ]
    if not options:
        return None
    return max(options, key=lambda c: (abs(c[0] - blocker[0]) + abs(c[1] - blocker[1]), -c[0], -c[1]))


def _travel(
    robot: Robot,
    goal: Cell,
    sensed: Mapping[Cell, int],
    radius: int,
    stop_adjacent: bool,
    force_replan: bool = False,
    **plan_update,
) -> Action:
    path = robot.path
    new_path = None
    observed = set(sensed) | robot.local_map.blocks
    if force_replan or not path or path[-1] != goal or path_blocked(path, observed, robot.pos, radius):
        new_path = _plan(robot, goal, sensed)
        if new_path is None:
            return Action(ActionKind.WAIT, detail="no-path", **plan_update)
        path = new_path
    steps = path[:-1] if stop_adjacent else path
    packed = tuple(new_path) if new_path is not None else None
    if not steps:
        return Action(ActionKind.REPLAN, path=packed, **plan_update)
    nxt = steps[0]
    if nxt in sensed:
        if robot.stall_ticks >= YIELD_AFTER and (sensed[nxt] < robot.id or robot.stall_ticks >= 3 * YIELD_AFTER):
            side = _sidestep(robot, sensed, nxt)
            if side is not None:
                return Action(ActionKind.MOVE, cell=side, path=(side,), detail="yield", **plan_update)
        return Action(ActionKind.WAIT, path=packed, detail="blocked", **plan_update)
    return Action(ActionKind.MOVE, cell=nxt, path=packed, **plan_update)


def _retarget(
    robot: Robot,
    sensed: Mapping[Cell, int],
    shape: Shape,
    radius: int,
    why: str,
    exclude: frozenset[Cell] = frozenset(),
) -> Action:
    exclude = exclude | {robot.pos}
    robot.local_map.infer_enclosed()
    if robot.local_map.is_complete():
        return Action(ActionKind.FINISH)
    try:
        decision = next_drop_position(robot.local_map, shape, robot.memory, robot.pos, exclude)
    except NoKnownFrontier:
        # walk toward unfilled cells to refresh the map
        lm = robot.local_map
        goal = closest((c for c in lm.shape_cells - lm.blocks - exclude if c not in sensed), robot.pos)
        if goal is None:
            return Action(ActionKind.WAIT, detail=f"{why}:no-frontier")
        return _travel(robot, goal, sensed, radius, stop_adjacent=False, force_replan=True)
    return _head_for(robot, decision.target, f"{why}:{decision.reason.value}", sensed, radius)


def _head_for(robot: Robot, target: Cell, reason: str, sensed: Mapping[Cell, int], radius: int) -> Action:
    if adjacent(robot.pos, target):
        return Action(ActionKind.REPLAN, target=target, reason=reason, path=(target,))
    return _travel(robot, target, sensed, radius, stop_adjacent=True, force_replan=True, target=target, reason=reason)


def _at_drop(robot: Robot, sensed: Mapping[Cell, int], shape: Shape, radius: int) -> Action:
    lm = robot.local_map
    target = robot.target
    if target in lm.blocks:
        return _retarget(robot, sensed, shape, radius, "filled")
    if target in sensed:
        return _retarget(robot, sensed, shape, radius, "occupied", frozenset({target}))
    view = GridView(lm.width, lm.height, frozenset(lm.blocks), lm.factories, {**sensed, robot.pos: robot.id})
    for other in sorted(sensed):
        if would_trap_robot(view, target, other, shape):
            return _retarget(robot, sensed, shape, radius, "traps-robot", frozenset({target}))
    if not self_preservation_check(robot, target, shape, sensed):
        return _retarget(robot, sensed, shape, radius, "self-trap", frozenset({target}))
    hole = unreachable_empty_after(view, target, shape)
    if hole is not None:
        if occupied_neighbor_count(lm.blocks, hole) and hole not in sensed:
            return _head_for(robot, hole, "unreachable", sensed, radius)
        return _retarget(robot, sensed, shape, radius, "would-seal", frozenset({target}))
    return Action(ActionKind.DROP, cell=target, memory=remember_candidates(lm, target, shape))


def decide(
    robot: Robot,
    sensed_robots: Mapping[Cell, int],
    shape: Shape,
    *,
    radius: int = DEFAULT_SENSOR_RADIUS,
    stuck_threshold: int = DEFAULT_STUCK_THRESHOLD,
) -> Action:
    """Choose this tick's action from the robot's map and fresh sensing."""
    if not robot.active:
        raise ValueError(f"robot {robot.id} is {robot.phase.value}")
    lm = robot.local_map
    if lm.is_complete():
        return Action(ActionKind.FINISH)
    if robot.stall_ticks >= stuck_threshold:
        return Action(ActionKind.STUCK)

    if not robot.has_block:
        factories = sorted(f for f in lm.factories if adjacent(f, robot.pos))
        if factories:
            lm.infer_enclosed()
            if lm.is_complete():
                return Action(ActionKind.FINISH)
            try:
                decision = next_drop_position(lm, shape, robot.memory, robot.pos, frozenset({robot.pos}))
            except NoKnownFrontier:
                # pick a target on the next tick, once off this cell
                return Action(ActionKind.LOAD, cell=factories[0])
            path = _plan(robot, decision.target, sensed_robots)
            return Action(
                ActionKind.LOAD,
                cell=factories[0],
                target=decision.target,
                reason=decision.reason.value,
                path=tuple(path) if path is not None else None,
            )
        goal = robot.path[-1] if robot.path else None
        docks = lm.docking_cells()
        if goal not in docks or goal in sensed_robots:
            goal = nearest_goal(lm, robot.pos, docks, frozenset(sensed_robots))
            if goal is None:
                goal = nearest_goal(lm, robot.pos, docks)
            if goal is None:
                return Action(ActionKind.WAIT, detail="no-dock")
        return _travel(robot, goal, sensed_robots, radius, stop_adjacent=False)

    if robot.target is None or robot.target in lm.blocks:
        return _retarget(robot, sensed_robots, shape, radius, "filled")
    if robot.target == robot.pos:
        return _retarget(robot, sensed_robots, shape, radius, "occupied")
    if adjacent(robot.pos, robot.target):
        return _at_drop(robot, sensed_robots, shape, radius)
    action = _travel(robot, robot.target, sensed_robots, radius, stop_adjacent=True)
    if action.detail == "no-path":
        return _retarget(robot, sensed_robots, shape, radius, "unreachable")
    return action
