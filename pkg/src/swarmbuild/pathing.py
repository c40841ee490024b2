"""Shortest paths on the 4-connected grid with transient obstacles."""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from typing import AbstractSet, Iterable, Optional, Sequence

from .grid import OFFSETS, Cell


def _passable(grid_map, cell: Cell, extra: AbstractSet[Cell]) -> bool:
    r, c = cell
    if not (0 <= r < grid_map.height and 0 <= c < grid_map.width):
        return False
    return cell not in grid_map.blocks and cell not in grid_map.factories and cell not in extra


def plan_path(
    grid_map,
    start: Cell,
    goal: Cell,
    extra_obstacles: AbstractSet[Cell] = frozenset(),
) -> Optional[list[Cell]]:
    """A* from ``start`` to ``goal``; returns the cells after start, or None.

    ``grid_map`` provides ``width``, ``height``, ``blocks`` and ``factories``.
    Neighbors expand up, left, right, down and equal priorities pop FIFO, so
    the result is a pure function of the inputs.
    """
    if start == goal:
        return []
    if not _passable(grid_map, goal, extra_obstacles):
        return None

    def h(cell: Cell) -> int:
        return abs(cell[0] - goal[0]) + abs(cell[1] - goal[1])

    counter = itertools.count()
    open_heap = [(h(start), next(counter), start)]
    g = {start: 0}
    parent: dict[Cell, Cell] = {}
    closed = set()
    while open_heap:
        _, _, cell = heapq.heappop(open_heap)
        if cell in closed:
            continue
        if cell == goal:
            path = [cell]
            while path[-1] in parent:
                path.append(parent[path[-1]])
            path.reverse()
            return path[1:]
        closed.add(cell)
        for dr, dc in OFFSETS:
            nxt = (cell[0] + dr, cell[1] + dc)
            if nxt in closed or not _passable(grid_map, nxt, extra_obstacles):
                continue
            cost = g[cell] + 1
            if cost < g.get(nxt, cost + 1):
                g[nxt] = cost
                parent[nxt] = cell
                heapq.heappush(open_heap, (cost + h(nxt), next(counter), nxt))
    return None


def distances_from(
    grid_map, start: Cell, extra_obstacles: AbstractSet[Cell] = frozenset()
) -> dict[Cell, int]:
    """BFS step counts from ``start`` to every reachable cell."""
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for dr, dc in OFFSETS:
            nxt = (cell[0] + dr, cell[1] + dc)
            if nxt not in dist and _passable(grid_map, nxt, extra_obstacles):
                dist[nxt] = dist[cell] + 1
                queue.append(nxt)
    return dist


def nearest_goal(
    grid_map,
    start: Cell,
    goals: Iterable[Cell],
    extra_obstacles: AbstractSet[Cell] = frozenset(),
) -> Optional[Cell]:
    """Goal with the shortest path from ``start``; ties by (row, col)."""
    dist = distances_from(grid_map, start, extra_obstacles)
    reachable = [(dist[g], g) for g in goals if g in dist]
    return min(reachable)[1] if reachable else None


def visible_prefix(path: Sequence[Cell], origin: Cell, radius: int) -> list[Cell]:
    out = []
    for cell in path:
        if max(abs(cell[0] - origin[0]), abs(cell[1] - origin[1])) > radius:
            break
        out.append(cell)
    return out


def path_blocked(path: Sequence[Cell], observed: AbstractSet[Cell], origin: Cell, radius: int) -> bool:
    """True if a sensed robot or block sits on the part of the path in view."""
    return any(cell in observed for cell in visible_prefix(path, origin, radius))
