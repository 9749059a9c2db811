import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from bgrisk.measures import Gamble

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).resolve().parents[1] / "src" / "bgrisk" / "data"


@pytest.fixture
def data_dir():
    return DATA


def random_gamble(rng, radius=20, max_atoms=5, integer=True):
    n = int(rng.integers(1, max_atoms + 1))
    if integer:
        values = rng.choice(np.arange(-radius, radius + 1), n, replace=False).astype(float)
    else:
        values = rng.uniform(-radius, radius, n)
    return Gamble.from_pairs(zip(values, rng.dirichlet(np.ones(n))), normalize=True)


@st.composite
def gambles(draw, radius=20.0, max_atoms=5):
    n = draw(st.integers(1, max_atoms))
    values = draw(st.lists(st.integers(-int(radius), int(radius)), min_size=n, max_size=n, unique=True))
    weights = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    total = sum(weights)
    return Gamble.from_pairs([(float(v), w / total) for v, w in zip(values, weights)], normalize=True)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("."))):
            terminalreporter.write_line(line)
