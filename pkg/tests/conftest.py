"""Shared fixtures: bundled case files and cached per-case analyses."""

from functools import lru_cache
from pathlib import Path

import pytest

from gridgfv import analyze_case, load_case

FIXTURES = Path(__file__).parents[1] / "fixtures"

# Every bundled case; several acceptance criteria quantify over all of them.
FIXTURE_NAMES = [
    "case2",
    "case4_path",
    "case4_ring",
    "case4_sym",
    "case7_study",
    "case9",
    "case9_lossless",
]


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.json"


@lru_cache(maxsize=None)
def get_case(name: str):
    return load_case(fixture_path(name))


@lru_cache(maxsize=None)
def get_analysis(name: str):
    return analyze_case(get_case(name))


def is_lossless_shuntfree(case) -> bool:
    return all(br.r == 0.0 and br.b_ch == 0.0 for br in case.branches) and all(
        b.g_shunt == 0.0 and b.b_shunt == 0.0 for b in case.buses
    )


@pytest.fixture(scope="session")
def case9():
    return get_case("case9")


@pytest.fixture(scope="session")
def case2():
    return get_case("case2")
