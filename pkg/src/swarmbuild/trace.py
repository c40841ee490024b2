"""Line-delimited JSON traces.

The first line is a header carrying the format version, the run config, the
scenario text and the robots' start cells. Every following line is one event::

    {"cell":[4,7],"detail":"","kind":"drop","robot":2,"tick":311}
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Optional, Union

from .engine import EVENT_KINDS, TraceEvent
from .grid import Cell
from .shapefile import shape_hash

FORMAT_VERSION = 1

PathOrFile = Union[str, Path, IO[str]]


class TraceFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class Trace:
    header: dict = field(default_factory=dict)
    events: list[TraceEvent] = field(default_factory=list)

    @property
    def spawns(self) -> dict[int, Cell]:
        return {i: tuple(c) for i, c in enumerate(self.header.get("spawns", []))}

    @property
    def shape_text(self) -> Optional[str]:
        return self.header.get("shape_text")


def make_header(config: Optional[Mapping] = None, shape_text: Optional[str] = None, spawns: Mapping[int, Cell] = {}) -> dict:
    header = {"record": "header", "format_version": FORMAT_VERSION, "config": dict(config or {})}
    if shape_text is not None:
        header["shape_text"] = shape_text
        header["shape_hash"] = shape_hash(shape_text)
    header["spawns"] = [list(spawns[i]) for i in sorted(spawns)]
    return header


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def event_to_record(event: TraceEvent) -> dict:
    return {
        "tick": event.tick,
        "robot": event.robot_id,
        "kind": event.kind,
        "cell": list(event.cell) if event.cell is not None else None,
        "detail": event.detail,
    }


def dumps_trace(events: Iterable[TraceEvent], header: Optional[dict] = None) -> str:
    lines = [_dump(header if header is not None else make_header())]
    last_tick = None
    for event in events:
        if last_tick is not None and event.tick < last_tick:
            raise ValueError(f"events out of tick order at tick {event.tick}")
        last_tick = event.tick
        lines.append(_dump(event_to_record(event)))
    return "\n".join(lines) + "\n"


def write_trace(events: Iterable[TraceEvent], sink: PathOrFile, header: Optional[dict] = None) -> None:
    text = dumps_trace(events, header)
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text)
    else:
        sink.write(text)


def _parse_event(obj: object, line: int) -> TraceEvent:
    if not isinstance(obj, dict) or set(obj) != {"tick", "robot", "kind", "cell", "detail"}:
        raise TraceFormatError(f"corrupted record (last valid line {line - 1})", line)
    tick, robot, kind, cell, detail = obj["tick"], obj["robot"], obj["kind"], obj["cell"], obj["detail"]
    if not isinstance(tick, int) or not isinstance(robot, int) or tick < 0 or robot < 0:
        raise TraceFormatError(f"corrupted record (last valid line {line - 1})", line)
    if kind not in EVENT_KINDS or not isinstance(detail, str):
        raise TraceFormatError(f"corrupted record (last valid line {line - 1})", line)
    if cell is not None:
        if not (isinstance(cell, list) and len(cell) == 2 and all(isinstance(v, int) for v in cell)):
            raise TraceFormatError(f"corrupted record (last valid line {line - 1})", line)
        cell = (cell[0], cell[1])
    return TraceEvent(tick, robot, kind, cell, detail)


def loads_trace(text: str) -> Trace:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TraceFormatError("missing header", 1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise TraceFormatError("corrupted header", 1) from None
    if not isinstance(header, dict) or header.get("record") != "header":
        raise TraceFormatError("missing header", 1)
    if header.get("format_version") != FORMAT_VERSION:
        raise TraceFormatError(
            f"format version mismatch: expected {FORMAT_VERSION}, got {header.get('format_version')!r}", 1
        )
    events = []
    last_tick = -1
    for n, raw in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError:
            raise TraceFormatError(f"corrupted record (last valid line {n - 1})", n) from None
        event = _parse_event(obj, n)
        if event.tick < last_tick:
            raise TraceFormatError(f"tick {event.tick} after tick {last_tick}", n)
        last_tick = event.tick
        events.append(event)
    return Trace(header, events)


def read_trace(source: PathOrFile) -> Trace:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    elif isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        text = source.read()
    else:
        raise TypeError(f"cannot read trace from {type(source).__name__}")
    return loads_trace(text)
