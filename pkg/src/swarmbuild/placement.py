"""Choosing where the next block goes.

Construction starts at the shape centroid and grows outward over the set of
empty shape cells touching known blocks. Each robot remembers the free cells
around its last placement and prefers them, which keeps robots working in
separate neighborhoods.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import AbstractSet

from .grid import Cell, Shape, closest, frontier_candidates, occupied_neighbor_count


class NoKnownFrontier(RuntimeError):
    """The robot's map has unfilled shape cells but no candidate to build on."""


class Reason(str, enum.Enum):
    CENTROID = "centroid"
    MEMORY_BIASED = "memory"
    FRONTIER = "frontier"


@dataclass(frozen=True)
class CandidateMemory:
    cells: frozenset[Cell] = frozenset()
    recorded_tick: int = -1


@dataclass(frozen=True)
class PlacementDecision:
    target: Cell
    reason: Reason
    candidate_count: int


def next_drop_position(
    local_map,
    shape: Shape,
    memory: CandidateMemory,
    ref_pos: Cell,
    exclude: AbstractSet[Cell] = frozenset(),
) -> PlacementDecision:
    """Pick the next drop target from the robot's own beliefs.

    ``local_map`` only needs a ``blocks`` set of cells believed to hold a
    block; anything else is assumed free. ``exclude`` removes cells the caller
    has just rejected (occupied by a robot, or unsafe to fill right now).
    """
    known = local_map.blocks & shape.cells
    center = shape.centroid_cell
    if not known and center not in exclude:
        return PlacementDecision(center, Reason.CENTROID, 1)

    frontier = frontier_candidates(known, shape) - exclude
    if not frontier:
        raise NoKnownFrontier("no known frontier")

    preferred = frontier & memory.cells
    if preferred:
        working, reason = preferred, Reason.MEMORY_BIASED
    else:
        working, reason = frontier, Reason.FRONTIER

    best = max(occupied_neighbor_count(known, c) for c in working)
    survivors = [c for c in working if occupied_neighbor_count(known, c) == best]
    return PlacementDecision(closest(survivors, ref_pos), reason, len(working))


def remember_candidates(local_map, placed: Cell, shape: Shape, tick: int = -1) -> CandidateMemory:
    """Free in-shape neighbors of a freshly placed block."""
    r, c = placed
    cells = frozenset(
        cell
        for cell in ((r - 1, c), (r, c - 1), (r, c + 1), (r + 1, c))
        if cell in shape.cells and cell not in local_map.blocks
    )
    return CandidateMemory(cells, tick)
