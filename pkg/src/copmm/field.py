"""Exact arithmetic in a prime field F_q.

Scalars are :class:`FieldElement` values and arrays are plain numpy arrays
holding canonical representatives in ``[0, q)``. For ``q <= 2**31`` arrays
use ``int64`` and products are computed with a 16-bit limb split so that no
intermediate overflows; larger moduli fall back to Python integers
(``dtype=object``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from sympy import isprime

from .errors import FieldMismatchError, ValidationError

DEFAULT_MODULUS = 2**31 - 1

_FAST_LIMIT = 2**31
_LIMB_BITS = 16
_LIMB_MASK = (1 << _LIMB_BITS) - 1
# inner-dimension chunk keeping sum(x * y_limb) below 2**63
_INNER_CHUNK = 1 << 15


@dataclass(frozen=True)
class FieldConfig:
    """A prime field F_q, with q checked for primality at construction."""

    modulus: int

    def __post_init__(self):
        q = self.modulus
        if not isinstance(q, (int, np.integer)) or isinstance(q, bool):
            raise ValidationError(f"modulus must be an integer, got {q!r}")
        q = int(q)
        object.__setattr__(self, "modulus", q)
        if q < 2:
            raise ValidationError(f"modulus q={q} must satisfy q >= 2")
        if q >= 2**64:
            raise ValidationError(f"modulus q={q} must be below 2**64")
        if not isprime(q):
            raise ValidationError(f"modulus q={q} is not prime")

    @property
    def q(self) -> int:
        return self.modulus

    @cached_property
    def dtype(self):
        return np.int64 if self.modulus <= _FAST_LIMIT else object

    def __call__(self, value) -> FieldElement:
        return self.embed_signed(value)

    def embed_signed(self, n) -> FieldElement:
        """Map an arbitrary integer to its canonical representative."""
        if isinstance(n, FieldElement):
            self._check(n.field)
            return n
        return FieldElement(int(n) % self.modulus, self)

    def zero(self) -> FieldElement:
        return FieldElement(0, self)

    def one(self) -> FieldElement:
        return FieldElement(1, self)

    def elements(self):
        return [FieldElement(v, self) for v in range(self.modulus)]

    def _check(self, other: FieldConfig):
        if other != self:
            raise FieldMismatchError(
                f"field mismatch: F_{self.modulus} vs F_{other.modulus}"
            )

    # -- scalar helpers on plain ints ------------------------------------

    def inv_int(self, x: int) -> int:
        x = int(x) % self.modulus
        if x == 0:
            raise ZeroDivisionError("zero has no inverse in a field")
        return pow(x, -1, self.modulus)

    # -- array helpers -----------------------------------------------------

    def asarray(self, data) -> np.ndarray:
        """Return a fresh canonical array for ``data`` (any integer values)."""
        arr = np.asarray(data)
        if arr.dtype == object or arr.dtype.kind not in "iu" or self.dtype is object:
            arr = np.asarray(data, dtype=object) % self.modulus
            return arr.astype(self.dtype)
        if arr.dtype.kind == "u" and arr.dtype.itemsize == 8:
            arr = arr % np.uint64(self.modulus)
        return np.mod(arr.astype(np.int64), self.modulus)

    def random_array(self, rng: np.random.Generator, shape) -> np.ndarray:
        """I.i.d. uniform entries of F_q."""
        if self.modulus < 2**63:
            out = rng.integers(0, self.modulus, size=shape, dtype=np.int64)
        else:
            out = rng.integers(0, self.modulus, size=shape, dtype=np.uint64)
        return self.asarray(out)

    def matmul(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Exact ``x @ y mod q`` for canonical 2-D arrays."""
        q = self.modulus
        if self.dtype is object:
            return (np.asarray(x, dtype=object) @ np.asarray(y, dtype=object)) % q
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        lo = y & _LIMB_MASK
        hi = y >> _LIMB_BITS
        inner = x.shape[-1]
        out_lo = np.zeros(x.shape[:-1] + y.shape[-1:], dtype=np.int64)
        out_hi = np.zeros_like(out_lo)
        for s in range(0, max(inner, 1), _INNER_CHUNK):
            xs = x[..., s : s + _INNER_CHUNK]
            out_lo = (out_lo + xs @ lo[s : s + _INNER_CHUNK]) % q
            out_hi = (out_hi + xs @ hi[s : s + _INNER_CHUNK]) % q
        return (out_lo + (out_hi << _LIMB_BITS) % q) % q

    def mul_scalar(self, x: np.ndarray, c: int) -> np.ndarray:
        c = int(c) % self.modulus
        if self.dtype is object:
            return (np.asarray(x, dtype=object) * c) % self.modulus
        # both factors < 2**31, so the product fits in int64
        return (np.asarray(x, dtype=np.int64) * c) % self.modulus

    def powers(self, base: int, exponents) -> np.ndarray:
        return self.asarray([pow(int(base), int(e), self.modulus) for e in exponents])


@dataclass(frozen=True)
class FieldElement:
    """An element of F_q stored as its canonical representative."""

    value: int
    field: FieldConfig

    def __post_init__(self):
        if not 0 <= self.value < self.field.modulus:
            raise ValidationError(
                f"value {self.value} is not canonical in F_{self.field.modulus}"
            )

    def _coerce(self, other) -> FieldElement:
        if isinstance(other, FieldElement):
            self.field._check(other.field)
            return other
        if isinstance(other, (int, np.integer)) and not isinstance(other, bool):
            return self.field.embed_signed(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement((self.value + other.value) % self.field.q, self.field)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement((self.value - other.value) % self.field.q, self.field)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.value * other.value % self.field.q, self.field)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.field.q, self.field)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inv()

    def __pow__(self, e: int):
        return FieldElement(pow(self.value, int(e), self.field.q), self.field)

    def inv(self) -> FieldElement:
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse in a field")
        return FieldElement(pow(self.value, -1, self.field.q), self.field)

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"{self.value} (mod {self.field.q})"


def add(x: FieldElement, y: FieldElement) -> FieldElement:
    return x + y


def sub(x: FieldElement, y: FieldElement) -> FieldElement:
    return x - y


def mul(x: FieldElement, y: FieldElement) -> FieldElement:
    return x * y


def neg(x: FieldElement) -> FieldElement:
    return -x


def inv(x: FieldElement) -> FieldElement:
    return x.inv()


def det_mod(rows, q: int) -> int:
    """Determinant of a square integer matrix modulo the prime ``q``."""
    a = [[int(v) % q for v in row] for row in rows]
    size = len(a)
    det = 1
    for col in range(size):
        pivot = next((r for r in range(col, size) if a[r][col]), None)
        if pivot is None:
            return 0
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det = det * a[col][col] % q
        inv_p = pow(a[col][col], -1, q)
        for r in range(col + 1, size):
            f = a[r][col] * inv_p % q
            if f:
                a[r] = [(x - f * y) % q for x, y in zip(a[r], a[col])]
    return det % q
