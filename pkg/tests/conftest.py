import numpy as np
import pytest

from ktanh import canonical_table
from ktanh import numerics as nx


@pytest.fixture(scope="session")
def table1():
    return canonical_table()


@pytest.fixture(scope="session")
def patterns():
    return nx.all_patterns()


@pytest.fixture(scope="session")
def finite_patterns(patterns):
    return patterns[nx.is_finite(patterns)]


def bf16(s, e, m):
    return (s << 15) | (e << 7) | m
