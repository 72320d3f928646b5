"""Bilinear algorithms for block matrix multiplication.

A tensor ``(a, b, c)`` of rank R turns ``C = AB`` on an m x p by p x n block
grid into R independent block products::

    A_r = sum a[r,k,l] A_kl,   B_r = sum b[r,l,j] B_lj,
    C_kj = sum_r c[r,k,j] A_r B_r
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .field import DEFAULT_MODULUS, FieldConfig
from .matrix import Matrix, combine

DEFAULT_MAX_RANK = 4096
SYMBOLIC_LIMIT = 64


class BilinearTensor:
    """Rank-R realization of the (m, p, n) block product, with signed integer entries."""

    __slots__ = ("m", "p", "n", "R", "a", "b", "c", "name")

    def __init__(self, a, b, c, name: str = "custom"):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        if a.ndim != 3 or b.ndim != 3 or c.ndim != 3:
            raise ValidationError("tensor arrays a, b, c must be 3-D")
        R, m, p = a.shape
        if b.shape[:2] != (R, p):
            raise ValidationError(f"b has shape {b.shape}, expected ({R}, {p}, n)")
        n = b.shape[2]
        if c.shape != (R, m, n):
            raise ValidationError(f"c has shape {c.shape}, expected ({R}, {m}, {n})")
        if R < 1:
            raise ValidationError("tensor rank must be >= 1")
        for arr in (a, b, c):
            arr.setflags(write=False)
        self.m, self.p, self.n, self.R = m, p, n, R
        self.a, self.b, self.c = a, b, c
        self.name = name

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.m, self.p, self.n

    def coeffs_a(self, field: FieldConfig) -> np.ndarray:
        return field.asarray(self.a.reshape(self.R, -1))

    def coeffs_b(self, field: FieldConfig) -> np.ndarray:
        return field.asarray(self.b.reshape(self.R, -1))

    def coeffs_c(self, field: FieldConfig) -> np.ndarray:
        # (m*n, R): row (k, j) holds c[:, k, j]
        return field.asarray(self.c.reshape(self.R, -1).T)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "p": self.p,
            "n": self.n,
            "R": self.R,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
        }

    def __eq__(self, other):
        if not isinstance(other, BilinearTensor):
            return NotImplemented
        return (
            np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.c, other.c)
        )

    __hash__ = None

    def __repr__(self):
        return f"BilinearTensor({self.name}, shape={self.shape}, R={self.R})"


def naive_tensor(m: int, p: int, n: int) -> BilinearTensor:
    """One multiplication per (k, l, j) triple; rank m*p*n."""
    for v in (m, p, n):
        if v < 1:
            raise ValidationError("naive_tensor needs m, p, n >= 1")
    R = m * p * n
    a = np.zeros((R, m, p), dtype=np.int64)
    b = np.zeros((R, p, n), dtype=np.int64)
    c = np.zeros((R, m, n), dtype=np.int64)
    r = 0
    for k in range(m):
        for l in range(p):
            for j in range(n):
                a[r, k, l] = 1
                b[r, l, j] = 1
                c[r, k, j] = 1
                r += 1
    return BilinearTensor(a, b, c, name=f"naive({m},{p},{n})")


def strassen_tensor() -> BilinearTensor:
    """Strassen's rank-7 algorithm for 2 x 2 blocks."""
    # rows: r = 1..7; entries [[x11, x12], [x21, x22]]
    a = [
        [[1, 0], [0, 1]],   # A11 + A22
        [[0, 0], [1, 1]],   # A21 + A22
        [[1, 0], [0, 0]],   # A11
        [[0, 0], [0, 1]],   # A22
        [[1, 1], [0, 0]],   # A11 + A12
        [[-1, 0], [1, 0]],  # A21 - A11
        [[0, 1], [0, -1]],  # A12 - A22
    ]
    b = [
        [[1, 0], [0, 1]],   # B11 + B22
        [[1, 0], [0, 0]],   # B11
        [[0, 1], [0, -1]],  # B12 - B22
        [[-1, 0], [1, 0]],  # B21 - B11
        [[0, 0], [0, 1]],   # B22
        [[1, 1], [0, 0]],   # B11 + B12
        [[0, 0], [1, 1]],   # B21 + B22
    ]
    # C11 = M1 + M4 - M5 + M7, C12 = M3 + M5, C21 = M2 + M4, C22 = M1 - M2 + M3 + M6
    c = np.zeros((7, 2, 2), dtype=np.int64)
    for r, s in ((1, 1), (4, 1), (5, -1), (7, 1)):
        c[r - 1, 0, 0] = s
    for r in (3, 5):
        c[r - 1, 0, 1] = 1
    for r in (2, 4):
        c[r - 1, 1, 0] = 1
    for r, s in ((1, 1), (2, -1), (3, 1), (6, 1)):
        c[r - 1, 1, 1] = s
    return BilinearTensor(a, b, c, name="strassen")


def kronecker_compose(
    t1: BilinearTensor, t2: BilinearTensor, max_rank: int = DEFAULT_MAX_RANK
) -> BilinearTensor:
    """Nest ``t2`` inside each block of ``t1``.

    Composite indices are ``r = r1 * R2 + r2`` and ``k = k1 * m2 + k2`` (likewise
    for l and j), so block (k, l) of the fine grid sits in coarse block (k1, l1).
    """
    R = t1.R * t2.R
    if R > max_rank:
        raise ValidationError(f"composed rank {R} exceeds the limit {max_rank}")

    def kron(x, y, d1, d2):
        out = np.einsum("rkl,sxy->rskxly", x, y)
        return out.reshape(R, d1, d2)

    a = kron(t1.a, t2.a, t1.m * t2.m, t1.p * t2.p)
    b = kron(t1.b, t2.b, t1.p * t2.p, t1.n * t2.n)
    c = kron(t1.c, t2.c, t1.m * t2.m, t1.n * t2.n)
    return BilinearTensor(a, b, c, name=f"{t1.name}*{t2.name}")


# -- verification ---------------------------------------------------------------


@dataclass
class TensorReport:
    passed: bool
    trials: int
    random_passed: bool
    symbolic_passed: bool | None
    witness: dict | None = dc_field(default=None)

    def __bool__(self):
        return self.passed


def _symbolic_check(t: BilinearTensor, q: int):
    """Exact check of the identity as a formal polynomial in block symbols.

    The coefficient of A_{k'l} B_{l'j'} in C_{kj} must be 1 when
    k'=k, l=l', j'=j and 0 otherwise.
    """
    lhs = np.einsum("rkj,rxl,ryz->kjxlyz", t.c, t.a, t.b, dtype=object)
    m, p, n = t.shape
    target = np.zeros_like(lhs)
    for k in range(m):
        for l in range(p):
            for j in range(n):
                target[k, j, k, l, l, j] = 1
    bad = np.argwhere((lhs - target) % q != 0)
    if bad.size == 0:
        return None
    k, j, k2, l, l2, j2 = (int(v) for v in bad[0])
    return {
        "kind": "symbolic",
        "C": [k, j],
        "term": {"A": [k2, l], "B": [l2, j2]},
        "coefficient": int(lhs[k, j, k2, l, l2, j2] % q),
        "expected": int(target[k, j, k2, l, l2, j2]),
    }


def apply_tensor(t: BilinearTensor, field: FieldConfig, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Recombined product for stacks of scalar grids A (T, m, p) and B (T, p, n)."""
    T = A.shape[0]
    Ar = field.matmul(A.reshape(T, -1), t.coeffs_a(field).T)
    Br = field.matmul(B.reshape(T, -1), t.coeffs_b(field).T)
    prod = field.asarray(Ar.astype(object) * Br.astype(object))
    return field.matmul(prod, t.coeffs_c(field).T).reshape(T, t.m, t.n)


def verify_tensor(
    t: BilinearTensor, trials: int = 100, field: FieldConfig | None = None, rng=None
) -> TensorReport:
    """Check the recombination identity on random scalar instances.

    When m*p*n is at most 64 the identity is also checked symbolically, and
    that result decides the report.
    """
    if trials < 1:
        raise ValidationError("verify_tensor needs trials >= 1")
    field = field or FieldConfig(DEFAULT_MODULUS)
    rng = np.random.default_rng(rng)
    m, p, n = t.shape
    A = field.random_array(rng, (trials, m, p))
    B = field.random_array(rng, (trials, p, n))
    got = apply_tensor(t, field, A, B)
    witness = None
    for i in range(trials):
        want = field.matmul(A[i], B[i])
        if not np.array_equal(got[i], want):
            bad = np.argwhere(got[i] != want)[0]
            witness = {
                "kind": "random",
                "trial": i,
                "A": A[i].tolist(),
                "B": B[i].tolist(),
                "C": [int(bad[0]), int(bad[1])],
                "got": int(got[i][tuple(bad)]),
                "expected": int(want[tuple(bad)]),
            }
            break
    random_ok = witness is None
    symbolic_ok = None
    if m * p * n <= SYMBOLIC_LIMIT:
        sym = _symbolic_check(t, field.q)
        symbolic_ok = sym is None
        if sym is not None and witness is None:
            witness = sym
    passed = symbolic_ok if symbolic_ok is not None else random_ok
    passed = passed and random_ok
    return TensorReport(passed, trials, random_ok, symbolic_ok, witness)


# -- batch encoding -------------------------------------------------------------


def _grid_stack(blocks, rows: int, cols: int) -> tuple[np.ndarray, FieldConfig]:
    if len(blocks) != rows or any(len(row) != cols for row in blocks):
        raise ValidationError(f"block grid must be {rows} x {cols}")
    field = blocks[0][0].field
    stack = np.stack([blk.data for row in blocks for blk in row])
    return stack, field


def encode_stack(coeffs: np.ndarray, stack: np.ndarray, field: FieldConfig) -> np.ndarray:
    """Apply (R, L) coefficients to a stack of L blocks; returns (R, h, w)."""
    return combine(field, coeffs, stack)


def batch_encode_A(blocks, t: BilinearTensor) -> list[Matrix]:
    stack, field = _grid_stack(blocks, t.m, t.p)
    out = encode_stack(t.coeffs_a(field), stack, field)
    return [Matrix._wrap(x, field) for x in out]


def batch_encode_B(blocks, t: BilinearTensor) -> list[Matrix]:
    stack, field = _grid_stack(blocks, t.p, t.n)
    out = encode_stack(t.coeffs_b(field), stack, field)
    return [Matrix._wrap(x, field) for x in out]


def recombine(products, t: BilinearTensor) -> list[list[Matrix]]:
    products = list(products)
    if len(products) != t.R:
        raise ValidationError(f"recombine needs R={t.R} products, got {len(products)}")
    field = products[0].field
    out = combine(field, t.coeffs_c(field), np.stack([x.data for x in products]))
    return [[Matrix._wrap(out[k * t.n + j], field) for j in range(t.n)] for k in range(t.m)]


# -- files ----------------------------------------------------------------------


def tensor_from_json(obj: dict, name: str = "file") -> BilinearTensor:
    try:
        t = BilinearTensor(obj["a"], obj["b"], obj["c"], name=name)
        declared = tuple(int(obj[k]) for k in ("m", "p", "n", "R"))
    except KeyError as exc:
        raise ValidationError(f"tensor file is missing key {exc}") from None
    if declared != (t.m, t.p, t.n, t.R):
        raise ValidationError(
            f"declared (m,p,n,R)={declared} disagrees with arrays {(t.m, t.p, t.n, t.R)}"
        )
    return t


def load_tensor(path, field: FieldConfig | None = None, trials: int = 100, rng=0) -> BilinearTensor:
    """Read a tensor file and reject it unless it passes :func:`verify_tensor`."""
    t = tensor_from_json(json.loads(Path(path).read_text()), name=Path(path).stem)
    report = verify_tensor(t, trials, field, rng)
    if not report.passed:
        raise ValidationError(f"tensor {path} fails verification: {report.witness}")
    return t


def save_tensor(path, t: BilinearTensor) -> None:
    Path(path).write_text(json.dumps(t.to_json()))


def builtin_tensor(spec: str) -> BilinearTensor:
    """Resolve names like ``strassen``, ``naive:2,3,2`` or ``strassen^2``."""
    spec = spec.strip().lower()
    if spec.startswith("naive"):
        _, _, dims = spec.partition(":")
        try:
            m, p, n = (int(v) for v in dims.split(","))
        except ValueError:
            raise ValidationError(f"naive tensor spec {spec!r} must look like naive:m,p,n") from None
        return naive_tensor(m, p, n)
    if spec.startswith("strassen"):
        _, _, power = spec.partition("^")
        power = int(power or 1)
        if power < 1:
            raise ValidationError("strassen power must be >= 1")
        t = strassen_tensor()
        for _ in range(power - 1):
            t = kronecker_compose(t, strassen_tensor())
        return t
    raise ValidationError(f"unknown built-in tensor {spec!r}")
