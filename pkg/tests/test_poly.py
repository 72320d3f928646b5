import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from copmm.errors import BelowThresholdError, ValidationError
from copmm.field import FieldConfig
from copmm.matrix import Matrix
from copmm.poly import (
    EvaluationPoints,
    MatrixPolynomial,
    evaluate,
    interpolate,
    interpolate_scalars,
    lagrange_basis_eval,
)


def scalar_eval(coeffs, x, q):
    return sum(c * pow(x, i, q) for i, c in enumerate(coeffs)) % q


def test_horner_frozen(F7):
    poly = MatrixPolynomial.from_scalars([1, 2, 3], F7)
    assert evaluate(poly, 2).to_rows() == [[3]]
    assert evaluate(poly, 0).to_rows() == [[1]]


def test_degree_zero_is_constant(F7):
    poly = MatrixPolynomial.from_scalars([4], F7)
    assert all(evaluate(poly, x).to_rows() == [[4]] for x in range(7))


def test_sparse_requires_increasing_exponents(F7):
    one = Matrix.identity(F7, 1)
    with pytest.raises(ValidationError):
        MatrixPolynomial.from_sparse([(3, one), (1, one)], F7)
    poly = MatrixPolynomial.from_sparse([(1, one), (4, one)], F7)
    assert poly.degree == 4
    assert [e for e, _ in poly.sparse()] == [1, 4]


def test_two_point_interpolation(F7):
    c0, c1 = Matrix(F7.asarray([[2]]), F7), Matrix(F7.asarray([[5]]), F7)
    poly = interpolate([(0, c0), (1, c0 + c1)], 1)
    assert poly.coefficient(0) == c0 and poly.coefficient(1) == c1


def test_constant_data_gives_constant(F7):
    c = Matrix(F7.asarray([[3, 1]]), F7)
    poly = interpolate([(x, c) for x in (1, 2, 4)], 2)
    assert poly.degree == 0 and poly.coefficient(0) == c


def test_degree5_roundtrip_q101():
    F = FieldConfig(101)
    rng = np.random.default_rng(5)
    coeffs = rng.integers(0, 101, 6).tolist()
    xs = [3, 9, 17, 40, 77, 100]
    ys = [scalar_eval(coeffs, x, 101) for x in xs]
    assert interpolate_scalars(F, xs, ys) == coeffs


def test_too_few_or_too_many_points(F7):
    c = Matrix.identity(F7, 1)
    with pytest.raises(BelowThresholdError):
        interpolate([(1, c), (2, c)], 2)
    with pytest.raises(ValidationError):
        interpolate([(1, c), (2, c), (3, c)], 1)


def test_duplicate_points_rejected(F7):
    c = Matrix.identity(F7, 1)
    with pytest.raises(ValidationError):
        interpolate([(1, c), (1, c)], 1)


@settings(max_examples=40, deadline=None)
@given(
    q=st.sampled_from([101, 2**31 - 1]),
    deg=st.integers(0, 8),
    seed=st.integers(0, 10**6),
)
def test_matrix_interpolation_roundtrip(q, deg, seed):
    F = FieldConfig(q)
    rng = np.random.default_rng(seed)
    stack = F.random_array(rng, (deg + 1, 2, 3))
    poly = MatrixPolynomial.from_stack(stack, F)
    xs = rng.choice(np.arange(1, 100), deg + 1, replace=False).tolist()
    back = interpolate([(x, evaluate(poly, x)) for x in xs], deg)
    assert np.array_equal(back.stack, stack)


def test_lagrange_basis_frozen():
    F = FieldConfig(11)
    betas = [F(1), F(2), F(3)]
    assert lagrange_basis_eval(betas, 1, F(5)).value == 3


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 6), k=st.integers(1, 6), x=st.integers(0, 100))
def test_lagrange_basis_properties(n, k, x):
    F = FieldConfig(101)
    k = min(k, n)
    betas = [F(b) for b in range(1, n + 1)]
    for j in range(1, n + 1):
        assert lagrange_basis_eval(betas, k, betas[j - 1]).value == (1 if j == k else 0)
    # the basis sums to one everywhere
    total = sum(lagrange_basis_eval(betas, i, F(x)).value for i in range(1, n + 1)) % 101
    assert total == 1


def test_evaluation_points_validation():
    F = FieldConfig(7)
    with pytest.raises(ValidationError):
        EvaluationPoints(F, (0, 1))
    with pytest.raises(ValidationError):
        EvaluationPoints(F, (1, 1))
    with pytest.raises(ValidationError, match="field too small"):
        EvaluationPoints.default_poly(F, 7)
    with pytest.raises(ValidationError):
        EvaluationPoints.default_lagrange(F, 4, 2, 2)
    pts = EvaluationPoints.default_lagrange(FieldConfig(101), 4, 2, 1)
    assert pts.betas == (1, 2, 3) and pts.alphas == (4, 5, 6, 7)
