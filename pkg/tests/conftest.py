from __future__ import annotations

import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from maeigen.domain_grid import ConvexDomain, discretize  # noqa: E402


@pytest.fixture(scope="session")
def unit_disc() -> ConvexDomain:
    return ConvexDomain.disc(0.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def unit_interval() -> ConvexDomain:
    return ConvexDomain.interval(0.0, 1.0)


@pytest.fixture(scope="session")
def disc_grid_16(unit_disc: ConvexDomain):
    return discretize(unit_disc, 1 / 16)


@pytest.fixture(scope="session")
def disc_grid_32(unit_disc: ConvexDomain):
    return discretize(unit_disc, 1 / 32)
