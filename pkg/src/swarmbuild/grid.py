"""Ground-truth grid model, shape geometry and reachability primitives.

Cells are ``(row, col)`` tuples. Adjacency, movement and flood fill are all
4-connected.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import AbstractSet, Iterable, Iterator, Literal, Mapping, Optional

Cell = tuple[int, int]

# expansion order shared by path planning and flood fills: up, left, right, down
OFFSETS: tuple[Cell, ...] = ((-1, 0), (0, -1), (0, 1), (1, 0))


class ShapeError(ValueError):
    """Raised when a target shape violates the geometry rules."""


class CellState(enum.Enum):
    FREE = "free"
    BLOCK = "block"
    FACTORY = "factory"
    ROBOT = "robot"


def neighbors4(cell: Cell, width: int, height: int) -> Iterator[Cell]:
    r, c = cell
    for dr, dc in OFFSETS:
        nr, nc = r + dr, c + dc
        if 0 <= nr < height and 0 <= nc < width:
            yield (nr, nc)


def adjacent(a: Cell, b: Cell) -> bool:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def closest(cells: Iterable[Cell], ref: Cell) -> Optional[Cell]:
    """Cell nearest to ``ref`` by Euclidean distance, ties by (row, col)."""
    best = None
    best_key = None
    for cell in cells:
        key = ((cell[0] - ref[0]) ** 2 + (cell[1] - ref[1]) ** 2, cell)
        if best_key is None or key < best_key:
            best, best_key = cell, key
    return best


def _round_half_down(x: Fraction) -> int:
    return ceil(x - Fraction(1, 2))


def centroid(shape_cells: Iterable[Cell]) -> Cell:
    """Return the in-shape cell used as the first placement.

    The arithmetic mean cell (rounded half-down on each axis) is returned when
    it belongs to the shape; otherwise the shape cell nearest to the exact mean.
    """
    cells = list(shape_cells)
    if not cells:
        raise ShapeError("empty shape")
    n = len(cells)
    mean_r = Fraction(sum(r for r, _ in cells), n)
    mean_c = Fraction(sum(c for _, c in cells), n)
    rounded = (_round_half_down(mean_r), _round_half_down(mean_c))
    members = set(cells)
    if rounded in members:
        return rounded
    return min(cells, key=lambda cell: ((cell[0] - mean_r) ** 2 + (cell[1] - mean_c) ** 2, cell))


@dataclass(frozen=True)
class Shape:
    cells: frozenset[Cell]
    width: int
    height: int
    centroid_cell: Cell = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", frozenset(self.cells))
        for r, c in self.cells:
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise ShapeError(f"shape cell {(r, c)} outside {self.height}x{self.width} grid")
        object.__setattr__(self, "centroid_cell", centroid(self.cells))

    def __contains__(self, cell: object) -> bool:
        return cell in self.cells

    def __len__(self) -> int:
        return len(self.cells)


def components(cells: AbstractSet[Cell]) -> list[set[Cell]]:
    """4-connected components of ``cells``, ordered by their smallest member."""
    seen: set[Cell] = set()
    out = []
    for start in sorted(cells):
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        seen.add(start)
        while queue:
            r, c = queue.popleft()
            for dr, dc in OFFSETS:
                nxt = (r + dr, c + dc)
                if nxt in cells and nxt not in seen:
                    seen.add(nxt)
                    comp.add(nxt)
                    queue.append(nxt)
        out.append(comp)
    return out


def enclosed_cells(shape: Shape) -> set[Cell]:
    """Non-shape cells with no non-shape route to the grid border."""
    outside = {
        (r, c)
        for r in range(shape.height)
        for c in range(shape.width)
        if (r, c) not in shape.cells
    }
    reached = {
        (r, c) for (r, c) in outside if r in (0, shape.height - 1) or c in (0, shape.width - 1)
    }
    queue = deque(reached)
    while queue:
        cell = queue.popleft()
        for nxt in neighbors4(cell, shape.width, shape.height):
            if nxt in outside and nxt not in reached:
                reached.add(nxt)
                queue.append(nxt)
    return outside - reached


def check_shape(shape: Shape) -> None:
    """Raise ShapeError unless the shape is one hole-free 4-connected piece."""
    if not shape.cells:
        raise ShapeError("empty shape")
    if len(components(shape.cells)) > 1:
        raise ShapeError("disconnected")
    if enclosed_cells(shape):
        raise ShapeError("interior hole")


@dataclass
class GridWorld:
    """Mutable ground truth for one simulation."""

    width: int
    height: int
    shape: Shape
    factories: frozenset[Cell]
    blocks: set[Cell] = field(default_factory=set)
    robot_positions: dict[int, Cell] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.factories = frozenset(self.factories)
        if self.factories & self.shape.cells:
            raise ShapeError("factory inside shape")

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def robot_at(self, cell: Cell) -> Optional[int]:
        for rid, pos in self.robot_positions.items():
            if pos == cell:
                return rid
        return None

    def state(self, cell: Cell) -> CellState:
        if cell in self.blocks:
            return CellState.BLOCK
        if cell in self.factories:
            return CellState.FACTORY
        if cell in self.robot_positions.values():
            return CellState.ROBOT
        return CellState.FREE

    def view(self) -> GridView:
        return GridView(
            self.width,
            self.height,
            frozenset(self.blocks),
            self.factories,
            {pos: rid for rid, pos in self.robot_positions.items()},
        )


@dataclass(frozen=True)
class GridView:
    """Immutable snapshot of cell states, ground truth or believed."""

    width: int
    height: int
    blocks: frozenset[Cell] = frozenset()
    factories: frozenset[Cell] = frozenset()
    robots: Mapping[Cell, int] = field(default_factory=dict)

    def state(self, cell: Cell) -> CellState:
        if cell in self.blocks:
            return CellState.BLOCK
        if cell in self.factories:
            return CellState.FACTORY
        if cell in self.robots:
            return CellState.ROBOT
        return CellState.FREE

    def with_block(self, cell: Cell) -> GridView:
        return GridView(self.width, self.height, self.blocks | {cell}, self.factories, self.robots)


def _traversable(view: GridView, cell: Cell, robots_block: bool) -> bool:
    if cell in view.blocks or cell in view.factories:
        return False
    return not (robots_block and cell in view.robots)


def free_region(
    view: GridView,
    start: Cell,
    treat_robots_as: Literal["free", "blocked"] = "free",
) -> set[Cell]:
    """Maximal 4-connected set of traversable cells containing ``start``."""
    if not (0 <= start[0] < view.height and 0 <= start[1] < view.width):
        raise ValueError(f"start {start} out of bounds")
    robots_block = treat_robots_as == "blocked"
    if view.state(start) in (CellState.BLOCK, CellState.FACTORY):
        raise ValueError("blocked start")
    if robots_block and start in view.robots:
        raise ValueError("blocked start")
    region = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for nxt in neighbors4(cell, view.width, view.height):
            if nxt not in region and _traversable(view, nxt, robots_block):
                region.add(nxt)
                queue.append(nxt)
    return region


def occupied_neighbor_count(known_blocks: AbstractSet[Cell], c: Cell) -> int:
    r, col = c
    return sum((r + dr, col + dc) in known_blocks for dr, dc in OFFSETS)


def frontier_candidates(known_blocks: AbstractSet[Cell], shape: Shape) -> set[Cell]:
    """Empty shape cells with at least one 4-neighbor in ``known_blocks``."""
    out = set()
    for r, c in known_blocks:
        for dr, dc in OFFSETS:
            cell = (r + dr, c + dc)
            if cell in shape.cells and cell not in known_blocks:
                out.add(cell)
    return out


def would_trap_robot(view: GridView, drop_cell: Cell, robot_cell: Cell, shape: Shape) -> bool:
    """True if a block at ``drop_cell`` leaves the robot no way off the footprint."""
    if view.state(drop_cell) is not CellState.FREE:
        raise ValueError(f"drop cell {drop_cell} is not free")
    if drop_cell == robot_cell:
        raise ValueError("drop cell holds the robot")
    region = free_region(view.with_block(drop_cell), robot_cell, "free")
    return all(cell in shape.cells for cell in region)


def sealed_cells(view: GridView, shape: Shape) -> set[Cell]:
    """Empty shape cells that cannot reach any non-shape cell (robots as free)."""
    reached = set()
    queue = deque()
    for r in range(view.height):
        for c in range(view.width):
            cell = (r, c)
            if cell not in shape.cells and _traversable(view, cell, False):
                reached.add(cell)
                queue.append(cell)
    while queue:
        cell = queue.popleft()
        for nxt in neighbors4(cell, view.width, view.height):
            if nxt not in reached and _traversable(view, nxt, False):
                reached.add(nxt)
                queue.append(nxt)
    return {cell for cell in shape.cells if cell not in view.blocks and cell not in reached}


def unreachable_empty_after(view: GridView, drop_cell: Cell, shape: Shape) -> Optional[Cell]:
    """Nearest empty shape cell that a block at ``drop_cell`` would seal off."""
    if view.state(drop_cell) in (CellState.BLOCK, CellState.FACTORY):
        raise ValueError(f"drop cell {drop_cell} is not free")
    return closest(sealed_cells(view.with_block(drop_cell), shape), drop_cell)
