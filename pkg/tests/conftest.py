import logging
import sys
from fractions import Fraction as F
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ckvuln.config import CASES_DIR  # noqa: E402
from ckvuln.controller import extract_paths, parse  # noqa: E402
from ckvuln.ranges import path_ranges  # noqa: E402

EXAMPLE_BOX = {"y1": (F(-2), F(2)), "y2": (F(-2), F(2))}
DRONE_BOX = {"x1": (F(-3), F(3))}
ENGINE_BOX = {"RPM": (F(0), F(6000)), "Speed": (F(0), F(150))}


def source(name: str) -> str:
    return (CASES_DIR / name).read_text()


@pytest.fixture(scope="session")
def example_ir():
    return parse(source("example_3path.c"))


@pytest.fixture(scope="session")
def drone_ir():
    return parse(source("drone.c"))


@pytest.fixture(scope="session")
def engine_ir():
    return parse(source("engine.c"))


@pytest.fixture(scope="session")
def example_table(example_ir):
    return extract_paths(example_ir, EXAMPLE_BOX)


@pytest.fixture(scope="session")
def drone_table(drone_ir):
    return extract_paths(drone_ir, DRONE_BOX)


@pytest.fixture(scope="session")
def engine_table(engine_ir):
    return extract_paths(engine_ir, ENGINE_BOX)


@pytest.fixture(scope="session")
def drone_ranges(drone_table):
    return path_ranges(drone_table)


@pytest.fixture(autouse=True)
def _quiet_extraction_warnings():
    logging.getLogger("ckvuln.falsifier").setLevel(logging.ERROR)
    yield


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(n: int, ok: bool, detail: str):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
