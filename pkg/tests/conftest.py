from __future__ import annotations

import os
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def star():
    from softqec.network import design_coupling, star_graph

    return star_graph(5, design_coupling(5))


@pytest.fixture(scope="session")
def cache_dir():
    """Per-realization result cache shared with scripts/ and the CLI."""
    return Path(os.environ.get("SOFTQEC_CACHE", ROOT / ".softqec_cache"))


# acceptance verdicts, collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
