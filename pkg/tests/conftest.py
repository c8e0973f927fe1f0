import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from linkevo.synth import SynthConfig, generate  # noqa: E402

# A small world with planted homophily and triadic closure; cheap enough for unit tests.
SMALL_WORLD = dict(n_nodes=80, homophily_strength=12.0, triadic_strength=0.5, base_formation_rate=0.0,
                   base_dissolution_rate=0.05, reference_quantile=0.9)


@pytest.fixture(scope="session")
def small_world():
    return generate(SynthConfig(seed=11, **SMALL_WORLD))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance_report():
    def record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
