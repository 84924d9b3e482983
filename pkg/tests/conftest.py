import json
import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import strategies as st

from onlinefair.core import make_instance

DATA = Path(__file__).parent / "data"


def load_table(name):
    """Printed reference table as (column names, row names, integer cells, bracket marks)."""
    table = json.loads((DATA / f"{name}_table.json").read_text())
    cells = [[int(c.strip("[]")) for c in row["cells"]] for row in table["rows"]]
    marks = [[c.startswith("[") for c in row["cells"]] for row in table["rows"]]
    return table["columns"], [r["agent"] for r in table["rows"]], cells, marks


@pytest.fixture
def sat_table():
    return load_table("sat_example")


@pytest.fixture
def matching_table():
    return load_table("matching_example")


def random_instance(rng, n, m, values=(0, 1)):
    return make_instance([[rng.choice(values) for _ in range(m)] for _ in range(n)])


def random_instances(count, seed, max_n, max_m, values=(0, 1)):
    rng = random.Random(seed)
    return [random_instance(rng, rng.randint(1, max_n), rng.randint(1, max_m), values) for _ in range(count)]


@st.composite
def instances(draw, max_n=3, max_m=4, values=(0, 1, 2)):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(0, max_m))
    rows = draw(st.lists(st.lists(st.sampled_from(values), min_size=m, max_size=m), min_size=n, max_size=n))
    return make_instance(rows)


rationals = st.fractions(min_value=0, max_value=100, max_denominator=50).map(Fraction)


_acceptance_lines = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, label in report.user_properties:
        if key == "criterion":
            _acceptance_lines.append(f"{'PASS' if report.passed else 'FAIL'}  {label}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
