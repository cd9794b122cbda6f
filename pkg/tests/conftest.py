from pathlib import Path

import pytest

from bvterm.frontend import load

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_nest(name, width=None):
    return load(FIXTURES / name, width=width)


@pytest.fixture
def nest_of():
    return fixture_nest
