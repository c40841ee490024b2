"""Binary PPM (P6) frames replayed from a trace."""

from __future__ import annotations

import colorsys
from pathlib import Path
from typing import Optional

from .grid import Cell
from .shapefile import Scenario, parse_shape

BACKGROUND = (255, 255, 255)
SHAPE_FILL = (236, 228, 206)
SHAPE_EDGE = (150, 140, 110)
BLOCK = (80, 80, 80)
FACTORY = (205, 30, 30)
PALETTE = [
    (31, 119, 180),
    (44, 160, 44),
    (255, 127, 14),
    (148, 103, 189),
    (23, 190, 207),
    (227, 119, 194),
    (188, 189, 34),
    (140, 86, 75),
]


def robot_color(robot_id: int) -> tuple[int, int, int]:
    if robot_id < len(PALETTE):
        return PALETTE[robot_id]
    h = (robot_id * 0.618033988749895) % 1.0
    r, g, b = colorsys.hsv_to_rgb(h, 0.75, 0.85)
    return (int(r * 255), int(g * 255), int(b * 255))


class Canvas:
    def __init__(self, width: int, height: int, fill=BACKGROUND):
        self.width = width
        self.height = height
        self.pixels = bytearray(bytes(fill) * (width * height))

    def put(self, x: int, y: int, color) -> None:
        if 0 <= x < self.width and 0 <= y < self.height:
            i = 3 * (y * self.width + x)
            self.pixels[i : i + 3] = bytes(color)

    def rect(self, x0: int, y0: int, w: int, h: int, color) -> None:
        for y in range(y0, y0 + h):
            for x in range(x0, x0 + w):
                self.put(x, y, color)

    def line(self, x0: int, y0: int, x1: int, y1: int, color) -> None:
        dx, dy = abs(x1 - x0), -abs(y1 - y0)
        sx = 1 if x0 < x1 else -1
        sy = 1 if y0 < y1 else -1
        err = dx + dy
        while True:
            self.put(x0, y0, color)
            if x0 == x1 and y0 == y1:
                return
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x0 += sx
            if e2 <= dx:
                err += dx
                y0 += sy

    def to_ppm(self) -> bytes:
        return b"P6\n%d %d\n255\n" % (self.width, self.height) + bytes(self.pixels)


def draw_frame(
    scenario: Scenario,
    blocks: set[Cell],
    robots: dict[int, Cell],
    goals: dict[int, Cell],
    scale: int = 8,
) -> Canvas:
    shape = scenario.shape
    canvas = Canvas(shape.width * scale, shape.height * scale)
    for r, c in shape.cells:
        canvas.rect(c * scale, r * scale, scale, scale, SHAPE_FILL)
    # outline on the footprint's border edges
    for r, c in shape.cells:
        x, y = c * scale, r * scale
        if (r - 1, c) not in shape.cells:
            canvas.rect(x, y, scale, 1, SHAPE_EDGE)
        if (r + 1, c) not in shape.cells:
            canvas.rect(x, y + scale - 1, scale, 1, SHAPE_EDGE)
        if (r, c - 1) not in shape.cells:
            canvas.rect(x, y, 1, scale, SHAPE_EDGE)
        if (r, c + 1) not in shape.cells:
            canvas.rect(x + scale - 1, y, 1, scale, SHAPE_EDGE)
    for r, c in blocks:
        canvas.rect(c * scale + 1, r * scale + 1, scale - 2, scale - 2, BLOCK)
    for r, c in scenario.factories:
        canvas.rect(c * scale, r * scale, scale, scale, FACTORY)
    half = scale // 2
    for rid in sorted(goals):
        if rid in robots:
            (r0, c0), (r1, c1) = robots[rid], goals[rid]
            canvas.line(c0 * scale + half, r0 * scale + half, c1 * scale + half, r1 * scale + half, robot_color(rid))
    inset = max(1, scale // 5)
    for rid, (r, c) in sorted(robots.items()):
        canvas.rect(c * scale + inset, r * scale + inset, scale - 2 * inset, scale - 2 * inset, robot_color(rid))
    return canvas


def sample_ticks(final_tick: int, every: int) -> list[int]:
    if every <= 0:
        return sorted({0, final_tick})
    ticks = list(range(0, final_tick, every))
    if not ticks or ticks[-1] != final_tick:
        ticks.append(final_tick)
    return ticks


def render_frames(
    trace,
    out_dir: str | Path,
    every: int = 0,
    scenario: Optional[Scenario] = None,
    scale: int = 8,
) -> list[Path]:
    """Write one frame per sampled tick; frame ``t`` is the state before tick ``t`` runs.

    The last frame shows the final world. ``every <= 0`` keeps only the first
    and last frames.
    """
    if scenario is None:
        if not trace.shape_text:
            raise ValueError("trace header has no scenario; pass one explicitly")
        scenario = parse_shape(trace.shape_text)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    events = trace.events
    final_tick = events[-1].tick + 1 if events else 0
    wanted = sample_ticks(final_tick, every)
    robots = dict(trace.spawns)
    blocks: set[Cell] = set()
    goals: dict[int, Cell] = {}
    written = []
    i = 0
    for tick in wanted:
        while i < len(events) and events[i].tick < tick:
            e = events[i]
            if e.kind == "move":
                robots[e.robot_id] = e.cell
            elif e.kind == "drop":
                blocks.add(e.cell)
                goals.pop(e.robot_id, None)
            elif e.kind in ("retarget", "replan") and e.cell is not None:
                goals[e.robot_id] = e.cell
            elif e.kind in ("fail_injected", "finish", "stuck"):
                goals.pop(e.robot_id, None)
                if e.kind == "fail_injected":
                    robots.pop(e.robot_id, None)
            i += 1
        path = out / f"frame_{tick:06d}.ppm"
        path.write_bytes(draw_frame(scenario, blocks, robots, goals, scale).to_ppm())
        written.append(path)
    return written
