from __future__ import annotations

from dataclasses import replace

from conftest import recorded, scenario_text
from swarmbuild.engine import TraceEvent
from swarmbuild.trace import Trace, make_header
from swarmbuild.validate import CHECKS, validate_trace


def test_engine_trace_passes():
    report = validate_trace(recorded("square5", 4), scenario_text("square5"))
    assert report.ok, report.format()
    assert report.format().count("PASS") == len(CHECKS)


def test_wrong_scenario_flagged():
    report = validate_trace(recorded("square5", 1), scenario_text("disc9"))
    assert "shape matches trace header" in report.failed()


def _mutate(trace, index, event):
    events = list(trace.events)
    events[index] = event
    return Trace(trace.header, events)


def test_out_of_shape_drop():
    trace = recorded("square5", 2)
    i = next(i for i, e in enumerate(trace.events) if e.kind == "drop")
    bad = _mutate(trace, i, replace(trace.events[i], cell=(0, 5)))
    report = validate_trace(bad, scenario_text("square5"))
    assert "blocks within shape" in report.failed()


def test_teleporting_robot():
    trace = recorded("square5", 2)
    i = next(i for i, e in enumerate(trace.events) if e.kind == "move")
    e = trace.events[i]
    bad = _mutate(trace, i, replace(e, cell=(e.cell[0], (e.cell[1] + 5) % 11)))
    report = validate_trace(bad, scenario_text("square5"))
    assert "legal moves" in report.failed()


def test_sealed_hole_ring():
    # a 3x3 footprint whose ring closes around the empty middle cell
    text = "F....\n.###.\n.###.\n.###.\n.....\n"
    ring = [(1, 2), (1, 1), (2, 1), (3, 1), (3, 2), (3, 3), (1, 3), (2, 3)]
    events = [TraceEvent(0, 0, "load", (0, 0))]
    tick = 0
    for i, cell in enumerate(ring):
        if i:
            tick += 1
            events.append(TraceEvent(tick, 0, "load", (0, 0)))
        tick += 1
        events.append(TraceEvent(tick, 0, "drop", cell))
    trace = Trace(make_header({}, text, {0: (0, 1)}), events)
    report = validate_trace(trace, text)
    assert "no sealed holes" in report.failed()
    # only the last ring block seals (2,2) in
    assert report.checks["no sealed holes"].first_tick == tick
    assert "(2, 2)" in report.checks["no sealed holes"].message


def test_drop_without_block_and_acting_after_finish():
    trace = recorded("square5", 1)
    events = list(trace.events)
    first_load = next(i for i, e in enumerate(events) if e.kind == "load")
    del events[first_load]
    report = validate_trace(Trace(trace.header, events), scenario_text("square5"))
    assert "legal phase transitions" in report.failed()

    events = list(trace.events)
    last = events[-1]
    events.append(TraceEvent(last.tick + 1, 0, "wait"))
    report = validate_trace(Trace(trace.header, events), scenario_text("square5"))
    assert "legal phase transitions" in report.failed()


def test_incomplete_construction_reported():
    trace = recorded("square5", 1)
    last_drop = max(i for i, e in enumerate(trace.events) if e.kind == "drop")
    cut = Trace(trace.header, trace.events[:last_drop])
    report = validate_trace(cut, scenario_text("square5"))
    assert report.failed() == ["complete construction"]
    assert "24/25" in report.checks["complete construction"].message


def test_collision_detected():
    trace = recorded("square5", 2)
    spawns = trace.spawns
    events = [TraceEvent(0, 0, "move", spawns[1])]
    report = validate_trace(Trace(trace.header, events), scenario_text("square5"))
    assert "no co-location" in report.failed()


def test_empty_trace_is_incomplete_but_well_formed():
    text = scenario_text("square5")
    report = validate_trace(Trace(make_header({}, text, {}), []), text)
    assert report.structure_ok
    assert report.failed() == ["complete construction"]
