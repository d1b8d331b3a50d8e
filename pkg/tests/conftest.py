from __future__ import annotations

import time

import numpy as np
import pytest

from tqclass import experiments as ex


@pytest.fixture(scope="session")
def iris():
    return ex.load_normalized_dataset()


@pytest.fixture(scope="session")
def trained_clustering(iris):
    """Seed-0 clustering training shared by the training/kernel criteria."""
    t0 = time.perf_counter()
    res = ex.train_clustering(iris, layers=2, rotation="Y", seed=0, budget=500)
    res["elapsed_s"] = time.perf_counter() - t0
    return res


@pytest.fixture(scope="session")
def comparison_cells(iris):
    """Five-seed explicit-comparison grid shared by the table and ensemble
    criteria (the expensive fixture of the suite)."""
    return ex.explicit_compare(iris, seeds=[0, 1, 2, 3, 4])


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


#: ``CRITERION n: PASS/FAIL`` lines collected by the acceptance tests and
#: echoed after the run (regular prints are swallowed by capture on pass)
ACCEPTANCE_VERDICTS: list[str] = []


@pytest.fixture()
def report():
    def _report(number: int, ok: bool, detail: str) -> None:
        line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_VERDICTS.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(
            ACCEPTANCE_VERDICTS,
            key=lambda s: int(s.split(":")[0].split()[1]),
        ):
            terminalreporter.write_line(line)
