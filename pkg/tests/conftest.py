from __future__ import annotations

import functools

from swarmbuild.engine import SimConfig, simulate
from swarmbuild.shapefile import format_shape, load_scenario, read_shape_text
from swarmbuild.trace import dumps_trace, loads_trace, make_header


@functools.lru_cache(maxsize=None)
def recorded_text(shape: str, robots: int, failures: tuple = ()) -> str:
    """Serialized trace for a bundled scenario, cached across tests."""
    config = SimConfig(shape, robots, failure_injections=list(failures))
    scenario = load_scenario(shape)
    sim, _ = simulate(config, scenario)
    return dumps_trace(sim.trace, make_header(config.to_dict(), format_shape(scenario), sim.spawns))


def recorded(shape: str, robots: int, failures: tuple = ()):
    return loads_trace(recorded_text(shape, robots, failures))


def scenario_text(shape: str) -> str:
    return read_shape_text(shape)


# criterion number -> (description, passed); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        text, ok = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}")
