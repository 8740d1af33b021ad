from __future__ import annotations

import os
from importlib.resources import files

import numpy as np
import pytest

#: Worker count for the heavier acceptance runs; single-process by default so
#: results are easy to reproduce interactively.
TEST_WORKERS = int(os.environ.get("REGIMETEST_TEST_WORKERS", "1"))


@pytest.fixture(scope="session")
def hamilton_growth() -> np.ndarray:
    """The vendored 1951Q2-1984Q4 output growth series (135 observations)."""
    from regimetest.harness import ingest_series

    path = files("regimetest").joinpath("data/gnp_hamilton_levels.csv")
    return ingest_series(str(path), "logdiff100").values


@pytest.fixture(scope="session")
def extended_growth() -> np.ndarray:
    """The vendored 1951Q2-2010Q4 output growth series (239 observations)."""
    from regimetest.harness import ingest_series

    path = files("regimetest").joinpath("data/gnp_extended_levels.csv")
    return ingest_series(str(path), "logdiff100").values
