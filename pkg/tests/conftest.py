import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mobsoc.profile import BehavioralProfile
from mobsoc.similarity import SimilarityGraph
from mobsoc.trace_io import LocationUniverse

ROOT = Path(__file__).resolve().parents[1]

SAMPLE_MATRIX = np.array(
    [
        [0.0, 0.0, 0.5, 0.3, 0.2],
        [0.2, 0.3, 0.4, 0.1, 0.0],
        [0.0, 0.0, 0.0, 0.6, 0.4],
        [0.2, 0.3, 0.1, 0.2, 0.2],
        [0.1, 0.0, 0.0, 0.0, 0.9],
    ]
)

SAMPLE_SESSIONS = """aa:bb:cc:dd:ee:ff\tLoc-1\t64400343\t66404567
aa:bb:cc:dd:ee:ff\tLoc-2\t85895623\t86895742
aa:bb:cc:dd:ee:ff\tLoc-3\t87444343\t89404567
aa:bb:cc:dd:ee:ff\tLoc-4\t98846767\t99878766
"""

BARBELL_EDGES = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)]


@pytest.fixture
def sample_matrix():
    return SAMPLE_MATRIX.copy()


@pytest.fixture
def barbell():
    return SimilarityGraph.from_edges(range(6), BARBELL_EDGES)


def universe(n):
    return LocationUniverse.from_ids(f"L{i}" for i in range(n))


def one_hot_profile(user, loc, n, uni=None):
    v = np.zeros((1, n))
    v[0, loc] = 1.0
    return BehavioralProfile(user, v, np.array([1.0]), 1.0, uni or universe(n))


def random_profile(rng, n, uni, user="u", max_k=5):
    """Profile with random orthonormal vectors and a random power spectrum."""
    r = int(rng.integers(1, max_k + 1))
    q, _ = np.linalg.qr(rng.normal(size=(n, r)))
    power = np.sort(rng.random(r + int(rng.integers(0, 3))) + 1e-3)[::-1]
    power = power / power.sum()
    k = int(rng.integers(1, r + 1))
    return BehavioralProfile(user, q[:, :k].T.copy(), power[:k].copy(), float(power[:k].sum()), uni)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, title, ok, detail=""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {title}" + (f" ({detail})" if detail else "")
        request.config.stash[_ACCEPTANCE_KEY].append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
