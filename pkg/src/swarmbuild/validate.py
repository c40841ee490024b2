"""Replay a trace against a fresh world model and audit every run invariant.

Nothing here imports the engine or the grid helpers: the checks are written
out again so they can audit traces from any producer.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

CHECKS = (
    "structure",
    "shape matches trace header",
    "first drop at centroid",
    "blocks within shape",
    "connected growth",
    "no sealed holes",
    "legal phase transitions",
    "legal moves",
    "no co-location",
    "no trapped robots",
    "complete construction",
)


@dataclass
class CheckResult:
    name: str
    passed: bool = True
    first_tick: Optional[int] = None
    message: str = ""


@dataclass
class ValidationReport:
    checks: dict[str, CheckResult] = field(default_factory=lambda: {n: CheckResult(n) for n in CHECKS})

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def structure_ok(self) -> bool:
        return self.checks["structure"].passed

    def fail(self, name: str, tick: Optional[int], message: str) -> None:
        check = self.checks[name]
        if check.passed:
            check.passed = False
            check.first_tick = tick
            check.message = message

    def failed(self) -> list[str]:
        return [n for n, c in self.checks.items() if not c.passed]

    def format(self) -> str:
        lines = []
        for c in self.checks.values():
            status = "PASS" if c.passed else "FAIL"
            where = f" (tick {c.first_tick})" if c.first_tick is not None else ""
            msg = f": {c.message}" if c.message else ""
            lines.append(f"{status} {c.name}{where}{msg}")
        return "\n".join(lines)


_STEPS = ((-1, 0), (1, 0), (0, -1), (0, 1))


def _around(cell, height, width):
    r, c = cell
    for dr, dc in _STEPS:
        if 0 <= r + dr < height and 0 <= c + dc < width:
            yield (r + dr, c + dc)


def _touching(a, b) -> bool:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def _reach(starts, passable, height, width) -> set:
    seen = set(starts)
    todo = deque(seen)
    while todo:
        cell = todo.popleft()
        for n in _around(cell, height, width):
            if n not in seen and passable(n):
                seen.add(n)
                todo.append(n)
    return seen


def _mean_cell(cells) -> tuple[int, int]:
    # exact rational mean, rounded half-down, nearest member as fallback
    n = len(cells)
    sr = sum(r for r, _ in cells)
    sc = sum(c for _, c in cells)

    def half_down(total: int) -> int:
        q, rem = divmod(2 * total, 2 * n)
        # value = total/n = q + rem/(2n); round up only when strictly above .5
        return q + 1 if rem > n else q

    guess = (half_down(sr), half_down(sc))
    if guess in cells:
        return guess
    return min(cells, key=lambda p: ((n * p[0] - sr) ** 2 + (n * p[1] - sc) ** 2, p))


def _grid(scenario_text: str):
    rows = [r.rstrip() for r in scenario_text.splitlines() if r.strip()]
    shape = {(r, c) for r, row in enumerate(rows) for c, ch in enumerate(row) if ch == "#"}
    factories = {(r, c) for r, row in enumerate(rows) for c, ch in enumerate(row) if ch == "F"}
    return len(rows), len(rows[0]) if rows else 0, shape, factories


def _canonical(text: str) -> str:
    rows = [r.rstrip() for r in text.splitlines() if r.strip()]
    return "\n".join(rows) + "\n"


def validate_trace(trace, scenario_text: str) -> ValidationReport:
    """Audit ``trace`` (a :class:`swarmbuild.trace.Trace`) against the scenario file text."""
    report = ValidationReport()
    height, width, shape, factories = _grid(scenario_text)
    header = trace.header or {}

    if "shape_text" in header and _canonical(header["shape_text"]) != _canonical(scenario_text):
        report.fail("shape matches trace header", None, "trace was recorded on a different scenario")
    if "shape_hash" in header and "shape_text" not in header:
        digest = hashlib.sha256(_canonical(scenario_text).encode()).hexdigest()
        if digest != header["shape_hash"]:
            report.fail("shape matches trace header", None, "shape hash differs")

    spawns = header.get("spawns", [])
    pos: dict[int, tuple[int, int]] = {}
    for rid, cell in enumerate(spawns):
        cell = tuple(cell)
        if not (0 <= cell[0] < height and 0 <= cell[1] < width) or cell in shape or cell in factories:
            report.fail("structure", None, f"robot {rid} spawns on invalid cell {cell}")
            return report
        if cell in pos.values():
            report.fail("structure", None, f"robot {rid} spawns on an occupied cell")
            return report
        pos[rid] = cell

    carrying = {rid: False for rid in pos}
    status = {rid: "active" for rid in pos}
    blocks: set = set()
    center = _mean_cell(shape) if shape else None

    events = trace.events
    by_tick: dict[int, list] = {}
    last_tick, last_robot = -1, -1
    for e in events:
        if e.robot_id not in pos:
            report.fail("structure", e.tick, f"unknown robot {e.robot_id}")
            return report
        if e.tick < last_tick or (e.tick == last_tick and e.robot_id < last_robot):
            report.fail("structure", e.tick, "events out of order")
            return report
        if e.kind in ("move", "load", "drop") and e.cell is None:
            report.fail("structure", e.tick, f"{e.kind} without a cell")
            return report
        last_tick, last_robot = e.tick, e.robot_id
        by_tick.setdefault(e.tick, []).append(e)

    def passable(cell):
        return cell not in blocks and cell not in factories

    for tick in sorted(by_tick):
        batch = by_tick[tick]
        # removals take effect at the start of the tick
        for e in batch:
            if e.kind == "fail_injected":
                if status[e.robot_id] == "removed":
                    report.fail("legal phase transitions", tick, f"robot {e.robot_id} removed twice")
                status[e.robot_id] = "removed"
                carrying[e.robot_id] = False
                pos.pop(e.robot_id, None)
        for e in batch:
            rid = e.robot_id
            if e.kind == "fail_injected":
                continue
            if status[rid] != "active":
                report.fail("legal phase transitions", tick, f"robot {rid} acts after {status[rid]}")
                continue
            here = pos[rid]
            if e.kind == "move":
                if not _touching(here, e.cell) or not (0 <= e.cell[0] < height and 0 <= e.cell[1] < width):
                    report.fail("legal moves", tick, f"robot {rid} jumps {here} -> {e.cell}")
                others = {p for r, p in pos.items() if r != rid}
                if e.cell in blocks or e.cell in factories or e.cell in others:
                    report.fail("no co-location", tick, f"robot {rid} enters occupied {e.cell}")
                pos[rid] = e.cell
            elif e.kind == "load":
                if carrying[rid]:
                    report.fail("legal phase transitions", tick, f"robot {rid} loads while carrying")
                if e.cell not in factories or not _touching(here, e.cell):
                    report.fail("legal phase transitions", tick, f"robot {rid} loads away from a factory")
                carrying[rid] = True
            elif e.kind == "drop":
                cell = e.cell
                if not carrying[rid]:
                    report.fail("legal phase transitions", tick, f"robot {rid} drops without a block")
                if not _touching(here, cell):
                    report.fail("legal moves", tick, f"robot {rid} drops at non-adjacent {cell}")
                if cell in blocks or cell in factories or cell in pos.values():
                    report.fail("no co-location", tick, f"drop onto occupied {cell}")
                if cell not in shape:
                    report.fail("blocks within shape", tick, f"block at {cell} outside shape")
                if not blocks and cell != center:
                    report.fail("first drop at centroid", tick, f"first drop {cell}, centroid {center}")
                if blocks and not any(n in blocks for n in _around(cell, height, width)):
                    report.fail("connected growth", tick, f"block {cell} not adjacent to the structure")
                carrying[rid] = False
                blocks.add(cell)
                outside = [
                    (r, c)
                    for r in range(height)
                    for c in range(width)
                    if (r, c) not in shape and passable((r, c))
                ]
                reached = _reach(outside, passable, height, width)
                holes = sorted(c for c in shape if c not in blocks and c not in reached)
                if holes:
                    report.fail("no sealed holes", tick, f"empty cell {holes[0]} sealed in")
            elif e.kind in ("finish", "stuck"):
                status[rid] = "finished" if e.kind == "finish" else "stuck"

    docks = {n for f in factories for n in _around(f, height, width) if passable(n)}
    for rid, cell in sorted(pos.items()):
        if status[rid] == "stuck":
            continue
        region = _reach([cell], passable, height, width)
        if not region & docks:
            report.fail("no trapped robots", last_tick if last_tick >= 0 else None, f"robot {rid} cannot reach a factory")
            break

    if blocks != shape:
        report.fail(
            "complete construction",
            last_tick if last_tick >= 0 else None,
            f"incomplete construction: {len(blocks & shape)}/{len(shape)} cells",
        )
    return report
