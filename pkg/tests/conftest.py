import numpy as np
import pytest

from scrstrauss.geometry import Domain, make_trap_grid
from scrstrauss.normconst import GridSpec, build_table


def uniform_pair_prob(b, width, height, draws=10**7, seed=12345):
    """P(||U - V|| < b) for independent uniforms on a rectangle, by brute Monte Carlo."""
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 10**6
    for _ in range(draws // chunk):
        dx = (rng.random(chunk) - rng.random(chunk)) * width
        dy = (rng.random(chunk) - rng.random(chunk)) * height
        hits += np.count_nonzero(dx * dx + dy * dy < b * b)
    return hits / draws


@pytest.fixture(scope="session")
def square20():
    return Domain(0.0, 20.0, 0.0, 20.0)


@pytest.fixture(scope="session")
def small_table(square20):
    """n = 1..12 on a 20 x 20 domain, b in {3, 5}."""
    spec = GridSpec(tuple(np.round(np.arange(31) * 0.1, 10)), (3.0, 5.0), tuple(range(1, 13)))
    return build_table(spec, square20, n_samples=4000, burn_in=1, warmup=20, seed=3)


@pytest.fixture(scope="session")
def small_traps():
    return make_trap_grid(3, 3, 5.0, center=(10.0, 10.0))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
