"""Text-grid scenario files.

One character per cell, rows separated by newlines::

    #  shape cell
    .  free cell
    F  block factory
    S  optional robot spawn cell (free)
"""

from __future__ import annotations

import hashlib
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Optional

from .grid import Cell, Shape, ShapeError, components, enclosed_cells

SHAPE_CHARS = {"#", ".", "F", "S"}


class ShapeFileError(ShapeError):
    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.reason = message
        self.line = line
        self.col = col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


class Scenario(NamedTuple):
    shape: Shape
    factories: frozenset[Cell]
    spawns: tuple[Cell, ...]


def _at(cell: Cell) -> dict:
    return {"line": cell[0] + 1, "col": cell[1] + 1}


def parse_shape(text: str) -> Scenario:
    """Parse and validate a scenario; errors name the first offending line/column."""
    rows = text.splitlines()
    while rows and not rows[-1].strip():
        rows.pop()
    if not rows:
        raise ShapeFileError("empty file")
    width = len(rows[0])
    cells, factories, spawns = set(), set(), []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ShapeFileError(f"ragged rows: expected {width} columns, got {len(row)}", r + 1, min(len(row), width) + 1)
        for c, ch in enumerate(row):
            if ch not in SHAPE_CHARS:
                raise ShapeFileError(f"unknown character {ch!r}", r + 1, c + 1)
            if ch == "#":
                cells.add((r, c))
            elif ch == "F":
                factories.add((r, c))
            elif ch == "S":
                spawns.append((r, c))
    height = len(rows)
    if not cells:
        raise ShapeFileError("zero shape cells")
    if not factories:
        raise ShapeFileError("no factory")
    comps = components(cells)
    if len(comps) > 1:
        raise ShapeFileError("disconnected", **_at(min(comps[1])))
    shape = Shape(frozenset(cells), width, height)
    enclosed = enclosed_cells(shape)
    trapped_factories = sorted(enclosed & factories)
    if trapped_factories:
        raise ShapeFileError("factory inside shape", **_at(trapped_factories[0]))
    if enclosed:
        raise ShapeFileError("interior hole", **_at(min(enclosed)))
    return Scenario(shape, frozenset(factories), tuple(spawns))


def format_shape(scenario: Scenario) -> str:
    shape = scenario.shape
    spawns = set(scenario.spawns)
    lines = []
    for r in range(shape.height):
        row = []
        for c in range(shape.width):
            cell = (r, c)
            if cell in shape.cells:
                row.append("#")
            elif cell in scenario.factories:
                row.append("F")
            elif cell in spawns:
                row.append("S")
            else:
                row.append(".")
        lines.append("".join(row))
    return "\n".join(lines) + "\n"


def shape_hash(text: str) -> str:
    return hashlib.sha256(format_shape(parse_shape(text)).encode()).hexdigest()


def builtin_shapes() -> list[str]:
    return sorted(p.name for p in resources.files("swarmbuild").joinpath("shapes").iterdir() if p.name.endswith(".txt"))


def resolve_shape_path(name: str | Path) -> Path:
    """A path on disk, or the name of a bundled scenario (``pentagram``)."""
    path = Path(name)
    if path.exists():
        return path
    stem = path.name if path.name.endswith(".txt") else path.name + ".txt"
    bundled = resources.files("swarmbuild").joinpath("shapes", stem)
    if bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(f"no shape file {name}")


def read_shape_text(name: str | Path) -> str:
    return resolve_shape_path(name).read_text()


def load_scenario(name: str | Path) -> Scenario:
    return parse_shape(read_shape_text(name))
