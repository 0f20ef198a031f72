import numpy as np
import pytest

from scoretriage.core import Dataset, ItemResponse, ScoreScale, build_agreement_matrix

LOW_B1_ROW = [0.0057, 0.61, 0.27, 0.11, 0.0029, 0.0]

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def scale():
    return ScoreScale.default(6)


@pytest.fixture
def low_b1_matrix(scale):
    """Matrix whose Low B1 row has 27% High B1 (other rows: identity-like data)."""
    counts = {0: 57, 1: 6114, 2: 2700, 3: 1100, 4: 29, 5: 0}
    pairs = [(1, h) for h, c in counts.items() for _ in range(c)]
    pairs += [(m, m) for m in (0, 2, 3, 4, 5)]
    return build_agreement_matrix(pairs, scale)


def make_dataset(scale, machine_by_candidate, human_by_candidate=None):
    responses = []
    for c, machine in enumerate(machine_by_candidate):
        human = human_by_candidate[c] if human_by_candidate is not None else [None] * len(machine)
        for i, (m, h) in enumerate(zip(machine, human)):
            responses.append(ItemResponse(f"c{c}", f"i{i}", m, h))
    return Dataset.from_responses(scale, responses)


@pytest.fixture
def small_dataset(scale):
    return make_dataset(
        scale,
        [[1, 1, 1], [0, 5, 2], [3, 3, 4]],
        [[1, 2, 1], [0, 4, 2], [3, 3, 3]],
    )


def random_matrix(rng, k):
    probs = rng.dirichlet(np.ones(k) * 0.7, size=k)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs
