import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from copmm.errors import FieldMismatchError, ValidationError
from copmm.field import FieldConfig, FieldElement, det_mod, inv

from conftest import Q31, int_matmul

PRIMES = st.sampled_from([2, 3, 5, 7, 101, 65537, Q31, 2**61 - 1])


def test_rejects_composite_modulus():
    with pytest.raises(ValidationError):
        FieldConfig(15)
    with pytest.raises(ValidationError):
        FieldConfig(1)


def test_small_scalar_values(F7):
    assert inv(F7(3)).value == 5
    assert (F7(3) / F7(5)).value == 2
    assert (F7(2) ** 3).value == 1
    assert (-F7(1)).value == 6
    assert F7.embed_signed(-3).value == 4


def test_inverse_of_zero_fails(F7):
    with pytest.raises(ZeroDivisionError):
        F7(0).inv()


def test_mixed_fields_rejected(F7):
    with pytest.raises(FieldMismatchError):
        F7(1) + FieldConfig(5)(1)


def test_matmul_frozen_value(F7):
    x = F7.asarray([[1, 2], [3, 4]])
    y = F7.asarray([[5, 6], [0, 1]])
    # by hand: [[5, 8], [15, 22]] mod 7
    assert F7.matmul(x, y).tolist() == [[5, 1], [1, 1]]


@settings(max_examples=60, deadline=None)
@given(q=PRIMES, a=st.integers(), b=st.integers())
def test_field_axioms(q, a, b):
    F = FieldConfig(q)
    x, y = F(a), F(b)
    assert (x + y).value == (a + b) % q
    assert (x * y).value == (a * b) % q
    assert (x - y + y) == x
    if x.value:
        assert (x * x.inv()).value == 1
        assert x.inv().value == pow(a % q, -1, q)


@settings(max_examples=30, deadline=None)
@given(q=PRIMES, seed=st.integers(0, 2**32 - 1), r=st.integers(1, 6), k=st.integers(1, 7), c=st.integers(1, 5))
def test_matmul_matches_python_ints(q, seed, r, k, c):
    F = FieldConfig(q)
    rng = np.random.default_rng(seed)
    x = F.random_array(rng, (r, k))
    y = F.random_array(rng, (k, c))
    assert F.matmul(x, y).tolist() == int_matmul(x, y, q)


def test_matmul_exact_at_extremes(Fbig):
    # every entry q-1 with a long inner dimension stresses the limb split
    k = 3 * 2**15 + 5
    x = np.full((2, k), Q31 - 1, dtype=np.int64)
    y = np.full((k, 2), Q31 - 1, dtype=np.int64)
    assert Fbig.matmul(x, y).tolist() == [[k % Q31] * 2] * 2


def test_mul_scalar(Fbig, rng):
    x = Fbig.random_array(rng, (3, 4))
    c = Q31 - 2
    want = [[int(v) * c % Q31 for v in row] for row in x]
    assert Fbig.mul_scalar(x, c).tolist() == want


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), size=st.integers(1, 5))
def test_det_mod_matches_sympy(seed, size):
    q = 101
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, q, (size, size)).tolist()
    assert det_mod(rows, q) == int(sympy.Matrix(rows).det()) % q


def test_element_repr_and_eq(F7):
    assert F7(10) == FieldElement(3, F7)
    assert F7(10) != FieldConfig(5)(3)
