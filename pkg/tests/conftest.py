import numpy as np
import pytest

from rdtp.data_ingest import FEATURES, HourlyDataset
from rdtp.instance import toy_instance
from rdtp.solver_bridge import solver_available
from rdtp.synthetic import synthetic_dataset

needs_highs = pytest.mark.skipif(not solver_available("highs"), reason="highs profile unavailable")
needs_cbc = pytest.mark.skipif(not solver_available("cbc"), reason="cbc binary not found")


@pytest.fixture(scope="session")
def toy():
    return toy_instance()


@pytest.fixture(scope="session")
def week():
    """Seven synthetic days with a southern peak on day 3."""
    return synthetic_dataset(n_days=7, seed=11, peak_days={"south": 3}, peak_boost=0.7)


def flat_dataset(n_days, load=0.5, wind=0.3, areas=("north", "south")):
    vals = np.empty((len(areas), 2, n_days * 24))
    vals[:, 0] = load
    vals[:, 1] = wind
    return HourlyDataset(areas, FEATURES, vals, n_days)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
