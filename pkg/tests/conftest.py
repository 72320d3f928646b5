import numpy as np
import pytest

from copmm.field import FieldConfig

Q31 = 2**31 - 1


@pytest.fixture
def F7():
    return FieldConfig(7)


@pytest.fixture
def Fbig():
    return FieldConfig(Q31)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def int_matmul(x, y, q):
    """Schoolbook product on Python ints, used as an independent oracle."""
    x = [[int(v) for v in row] for row in x]
    y = [[int(v) for v in row] for row in y]
    return [[sum(a * b for a, b in zip(row, col)) % q for col in zip(*y)] for row in x]
