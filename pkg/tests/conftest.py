import numpy as np
import pytest

from smoothodds.dataset import Dataset, ScoreRecord, credit_like_config, group_distribution, synthesize


def make_dataset(rows, score_range=None):
    return Dataset(tuple(ScoreRecord(float(s), g, int(y), float(w)) for s, g, y, w in rows), score_range=score_range)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tiny_rows():
    # two groups on a three-point score grid, integral weights
    return [
        (1.0, "a", 0, 4), (1.0, "a", 1, 1),
        (2.0, "a", 0, 3), (2.0, "a", 1, 3),
        (3.0, "a", 0, 1), (3.0, "a", 1, 6),
        (1.0, "b", 0, 5), (1.0, "b", 1, 2),
        (2.0, "b", 0, 2), (2.0, "b", 1, 2),
        (3.0, "b", 0, 2), (3.0, "b", 1, 4),
    ]


@pytest.fixture
def tiny(tiny_rows):
    return make_dataset(tiny_rows)


@pytest.fixture(scope="session")
def credit():
    """Four groups, 25k individuals each (10^5 total weight)."""
    return synthesize(credit_like_config(), seed=1)


@pytest.fixture(scope="session")
def small_credit():
    return synthesize(credit_like_config(size=4000, step=2.0), seed=7)


def random_dist(rng, n=12, name="g"):
    scores = np.sort(rng.choice(np.arange(0, 100), size=n, replace=False)).astype(float)
    rows = []
    for s in scores:
        rows.append((s, name, 1, float(rng.integers(0, 20))))
        rows.append((s, name, 0, float(rng.integers(0, 20))))
    rows.append((scores[0], name, 1, 1.0))
    rows.append((scores[-1], name, 0, 1.0))
    return group_distribution(make_dataset(rows), name)
