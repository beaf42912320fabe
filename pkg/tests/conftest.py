import math

import pytest

from landau_lattice.symbols import FourierSymbol


@pytest.fixture
def harper():
    return FourierSymbol.harper_symbol()


@pytest.fixture
def sqrt2():
    return math.sqrt(2.0)
