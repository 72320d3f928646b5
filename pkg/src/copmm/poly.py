"""Polynomials with matrix coefficients over F_q: evaluation and interpolation.

Interpolation is quadratic-time Lagrange: the master polynomial
``P(x) = prod (x - x_i)`` is expanded once and each basis polynomial is
obtained from it by synthetic division.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BelowThresholdError, FieldMismatchError, ValidationError
from .field import FieldConfig, FieldElement
from .matrix import Matrix, combine


def _as_int(field: FieldConfig, x) -> int:
    if isinstance(x, FieldElement):
        field._check(x.field)
        return x.value
    return int(x) % field.q


class MatrixPolynomial:
    """Dense polynomial ``sum_r coeffs[r] x^r`` with equal-shape matrix coefficients."""

    __slots__ = ("field", "_stack")

    def __init__(self, coefficients, field: FieldConfig | None = None):
        coefficients = list(coefficients)
        if not coefficients:
            raise ValidationError("a polynomial needs at least one coefficient")
        field = field or coefficients[0].field
        shape = coefficients[0].shape
        for c in coefficients:
            if c.field != field:
                raise FieldMismatchError("coefficients belong to different fields")
            if c.shape != shape:
                raise ValidationError(f"coefficient shape mismatch: {c.shape} vs {shape}")
        self.field = field
        self._stack = np.stack([c.data for c in coefficients])
        self._stack.setflags(write=False)

    @classmethod
    def from_stack(cls, stack: np.ndarray, field: FieldConfig) -> MatrixPolynomial:
        obj = cls.__new__(cls)
        obj.field = field
        obj._stack = np.ascontiguousarray(stack, dtype=field.dtype)
        obj._stack.setflags(write=False)
        return obj

    @classmethod
    def from_sparse(cls, terms, field: FieldConfig, shape=None) -> MatrixPolynomial:
        """Build from ``(exponent, Matrix)`` pairs with strictly increasing exponents."""
        terms = list(terms)
        if not terms and shape is None:
            raise ValidationError("empty sparse polynomial needs an explicit shape")
        exps = [int(e) for e, _ in terms]
        if any(e < 0 for e in exps):
            raise ValidationError("exponents must be non-negative")
        if any(b <= a for a, b in zip(exps, exps[1:])):
            raise ValidationError("sparse exponents must be strictly increasing")
        shape = shape or terms[0][1].shape
        stack = np.zeros((max(exps, default=0) + 1,) + tuple(shape), dtype=field.dtype)
        for e, mat in terms:
            if mat.field != field:
                raise FieldMismatchError("coefficients belong to different fields")
            if mat.shape != tuple(shape):
                raise ValidationError(f"coefficient shape mismatch: {mat.shape} vs {shape}")
            stack[e] = mat.data
        return cls.from_stack(stack, field)

    @classmethod
    def from_scalars(cls, coeffs, field: FieldConfig) -> MatrixPolynomial:
        arr = field.asarray([int(c) for c in coeffs]).reshape(-1, 1, 1)
        return cls.from_stack(arr, field)

    @property
    def stack(self) -> np.ndarray:
        return self._stack

    @property
    def shape(self) -> tuple[int, int]:
        return self._stack.shape[1:]

    @property
    def length(self) -> int:
        return self._stack.shape[0]

    @property
    def degree(self) -> int:
        """Degree of the polynomial; -1 for the zero polynomial."""
        nz = np.flatnonzero(self._stack.reshape(self.length, -1).any(axis=1))
        return int(nz[-1]) if nz.size else -1

    @property
    def coefficients(self) -> list[Matrix]:
        return [Matrix._wrap(c, self.field) for c in self._stack]

    def coefficient(self, r: int) -> Matrix:
        if r < self.length:
            return Matrix._wrap(self._stack[r], self.field)
        return Matrix.zeros(self.field, *self.shape)

    def sparse(self) -> list[tuple[int, Matrix]]:
        """Nonzero terms as ``(exponent, Matrix)`` pairs."""
        flat = self._stack.reshape(self.length, -1)
        return [
            (r, Matrix._wrap(self._stack[r], self.field))
            for r in range(self.length)
            if flat[r].any()
        ]

    def scalar_coefficients(self) -> list[int]:
        if self.shape != (1, 1):
            raise ValidationError("scalar_coefficients needs 1x1 coefficients")
        return [int(v) for v in self._stack.reshape(-1)]

    def __eq__(self, other):
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        if self.field != other.field or self.shape != other.shape:
            return False
        d = max(self.degree, other.degree) + 1
        return np.array_equal(self._padded(d), other._padded(d))

    __hash__ = None

    def _padded(self, length: int) -> np.ndarray:
        if length <= self.length:
            return self._stack[:length]
        pad = np.zeros((length - self.length,) + self.shape, dtype=self.field.dtype)
        return np.concatenate([self._stack, pad])

    def __repr__(self):
        return f"MatrixPolynomial(degree={self.degree}, shape={self.shape}, F_{self.field.q})"


@dataclass(frozen=True)
class EvaluationPoints:
    """Worker points alpha_1..alpha_N and, in Lagrange mode, beta_1..beta_{R+T}."""

    field: FieldConfig
    alphas: tuple
    betas: tuple | None = None

    def __post_init__(self):
        q = self.field.q
        alphas = tuple(_as_int(self.field, a) for a in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        N = len(alphas)
        if N < 1:
            raise ValidationError("need at least one evaluation point")
        if self.betas is None:
            if q < N + 1:
                raise ValidationError(
                    f"field too small: q={q} < N+1={N + 1} distinct nonzero points"
                )
            if 0 in alphas:
                raise ValidationError("alphas must be nonzero in polynomial-code mode")
            if len(set(alphas)) != N:
                raise ValidationError("alphas must be pairwise distinct")
        else:
            betas = tuple(_as_int(self.field, b) for b in self.betas)
            object.__setattr__(self, "betas", betas)
            total = N + len(betas)
            if q < total:
                raise ValidationError(
                    f"field too small: q={q} < N+R+T={total} distinct points"
                )
            if len(set(alphas + betas)) != total:
                raise ValidationError("alphas and betas must be pairwise distinct")

    @classmethod
    def default_poly(cls, field: FieldConfig, N: int) -> EvaluationPoints:
        return cls(field, tuple(range(1, N + 1)))

    @classmethod
    def default_lagrange(cls, field: FieldConfig, N: int, R: int, T: int) -> EvaluationPoints:
        return cls(
            field,
            tuple(range(R + T + 1, R + T + N + 1)),
            tuple(range(1, R + T + 1)),
        )

    @property
    def N(self) -> int:
        return len(self.alphas)

    @property
    def lagrange_mode(self) -> bool:
        return self.betas is not None


def evaluate(poly: MatrixPolynomial, x) -> Matrix:
    """Horner evaluation of ``poly`` at ``x``."""
    f = poly.field
    xv = _as_int(f, x)
    acc = np.array(poly.stack[-1], dtype=f.dtype)
    for coeff in poly.stack[-2::-1]:
        acc = (f.mul_scalar(acc, xv) + coeff) % f.q
    return Matrix._wrap(acc, f)


def _check_distinct(xs):
    if len(set(xs)) != len(xs):
        raise ValidationError("interpolation x-values must be pairwise distinct")


def _poly_mul_linear(coeffs: list[int], root: int, q: int) -> list[int]:
    # multiply by (x - root); coefficients are low-to-high
    out = [0] * (len(coeffs) + 1)
    for i, c in enumerate(coeffs):
        out[i + 1] = (out[i + 1] + c) % q
        out[i] = (out[i] - root * c) % q
    return out


def interpolation_matrix(field: FieldConfig, xs) -> np.ndarray:
    """Inverse Vandermonde ``M`` with ``coeffs = M @ values`` for the nodes ``xs``."""
    q = field.q
    xs = [_as_int(field, x) for x in xs]
    _check_distinct(xs)
    K = len(xs)
    master = [1]
    for x in xs:
        master = _poly_mul_linear(master, x, q)
    out = [[0] * K for _ in range(K)]
    for i, xi in enumerate(xs):
        # synthetic division of master by (x - xi)
        quot = [0] * K
        carry = 0
        for d in range(K, 0, -1):
            carry = (master[d] + carry * xi) % q
            quot[d - 1] = carry
        denom = 1
        for j, xj in enumerate(xs):
            if j != i:
                denom = denom * (xi - xj) % q
        w = pow(denom, -1, q)
        for d in range(K):
            out[d][i] = quot[d] * w % q
    return field.asarray(out)


def interpolation_weights(field: FieldConfig, xs, targets) -> np.ndarray:
    """``W[t, i] = L_i(targets[t])`` for the Lagrange basis on nodes ``xs``."""
    q = field.q
    xs = [_as_int(field, x) for x in xs]
    _check_distinct(xs)
    rows = []
    for t in targets:
        t = _as_int(field, t)
        rows.append([_basis_value(xs, i, t, q) for i in range(len(xs))])
    return field.asarray(rows)


def _basis_value(xs, i: int, x: int, q: int) -> int:
    num = 1
    den = 1
    xi = xs[i]
    for j, xj in enumerate(xs):
        if j != i:
            num = num * (x - xj) % q
            den = den * (xi - xj) % q
    return num * pow(den, -1, q) % q


def interpolate(points, degree_bound: int) -> MatrixPolynomial:
    """Unique polynomial of degree <= ``degree_bound`` through ``points``.

    ``points`` is a sequence of ``(x, Matrix)`` pairs and must contain exactly
    ``degree_bound + 1`` entries.
    """
    points = list(points)
    need = degree_bound + 1
    if len(points) < need:
        raise BelowThresholdError(
            f"below recovery threshold: {len(points)} points supplied, {need} required"
        )
    if len(points) > need:
        raise ValidationError(
            f"interpolate takes exactly degree_bound+1={need} points, got {len(points)}"
        )
    field = points[0][1].field
    shape = points[0][1].shape
    for _, y in points:
        if y.field != field:
            raise FieldMismatchError("points belong to different fields")
        if y.shape != shape:
            raise ValidationError(f"value shape mismatch: {y.shape} vs {shape}")
    xs = [_as_int(field, x) for x, _ in points]
    M = interpolation_matrix(field, xs)
    ys = np.stack([y.data for _, y in points])
    return MatrixPolynomial.from_stack(combine(field, M, ys), field)


def interpolate_scalars(field: FieldConfig, xs, ys) -> list[int]:
    """Coefficients (low to high) of the polynomial through scalar points."""
    xs = list(xs)
    ys = field.asarray([_as_int(field, y) for y in ys]).reshape(-1, 1)
    if len(xs) != ys.shape[0]:
        raise ValidationError("xs and ys differ in length")
    M = interpolation_matrix(field, xs)
    return [int(v) for v in field.matmul(M, ys).ravel()]


def lagrange_basis_eval(betas, k: int, x) -> FieldElement:
    """The ``k``-th (1-based) Lagrange basis polynomial on ``betas`` evaluated at ``x``."""
    betas = list(betas)
    fields = {b.field for b in betas if isinstance(b, FieldElement)}
    if isinstance(x, FieldElement):
        fields.add(x.field)
    if len(fields) != 1:
        raise FieldMismatchError("lagrange_basis_eval needs field elements from one field")
    field = fields.pop()
    vals = [_as_int(field, b) for b in betas]
    _check_distinct(vals)
    if not 1 <= k <= len(vals):
        raise ValidationError(f"basis index k={k} must lie in [1, {len(vals)}]")
    return FieldElement(_basis_value(vals, k - 1, _as_int(field, x), field.q), field)
