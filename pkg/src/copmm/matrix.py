"""Dense matrices over F_q, equal-size block partitioning, and the FQMX file format."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FieldMismatchError, ValidationError
from .field import FieldConfig, FieldElement, det_mod
from .ops import tally

FQMX_MAGIC = b"FQMX"
FQMX_VERSION = 1


class Matrix:
    """An immutable dense matrix over a prime field.

    Entries are held in a read-only numpy array of canonical representatives.
    """

    __slots__ = ("field", "_data")

    def __init__(self, data, field: FieldConfig):
        arr = field.asarray(data)
        if arr.ndim != 2:
            raise ValidationError(f"matrix data must be 2-D, got shape {arr.shape}")
        arr.setflags(write=False)
        self.field = field
        self._data = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray, field: FieldConfig) -> Matrix:
        # trusted constructor: arr is already canonical and 2-D
        obj = cls.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=field.dtype)
        arr.setflags(write=False)
        obj.field = field
        obj._data = arr
        return obj

    @classmethod
    def zeros(cls, field: FieldConfig, rows: int, cols: int) -> Matrix:
        return cls._wrap(np.zeros((rows, cols), dtype=field.dtype), field)

    @classmethod
    def identity(cls, field: FieldConfig, size: int) -> Matrix:
        return cls._wrap(np.eye(size, dtype=np.int64).astype(field.dtype), field)

    @classmethod
    def random(cls, field: FieldConfig, rows: int, cols: int, rng) -> Matrix:
        rng = np.random.default_rng(rng)
        return cls._wrap(field.random_array(rng, (rows, cols)), field)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def entries(self) -> list[FieldElement]:
        """Row-major list of entries."""
        return [FieldElement(int(v), self.field) for v in self._data.ravel()]

    def __getitem__(self, idx) -> FieldElement:
        i, j = idx
        return FieldElement(int(self._data[i, j]), self.field)

    def to_rows(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self._data]

    def is_zero(self) -> bool:
        return not np.any(self._data)

    def _same_field(self, other: Matrix):
        if other.field != self.field:
            raise FieldMismatchError(
                f"field mismatch: F_{self.field.q} vs F_{other.field.q}"
            )

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return (
            self.field == other.field
            and self.shape == other.shape
            and np.array_equal(self._data, other._data)
        )

    __hash__ = None

    def __add__(self, other: Matrix) -> Matrix:
        self._same_field(other)
        if self.shape != other.shape:
            raise ValidationError(f"shape mismatch: {self.shape} vs {other.shape}")
        return Matrix._wrap((self._data + other._data) % self.field.q, self.field)

    def __sub__(self, other: Matrix) -> Matrix:
        self._same_field(other)
        if self.shape != other.shape:
            raise ValidationError(f"shape mismatch: {self.shape} vs {other.shape}")
        return Matrix._wrap((self._data - other._data) % self.field.q, self.field)

    def __neg__(self) -> Matrix:
        return Matrix._wrap((-self._data) % self.field.q, self.field)

    def scale(self, c) -> Matrix:
        tally(self._data.size)
        return Matrix._wrap(self.field.mul_scalar(self._data, int(c)), self.field)

    def __matmul__(self, other: Matrix) -> Matrix:
        return mat_mul(self, other)

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols} over F_{self.field.q})"


@dataclass(frozen=True)
class PartitionSpec:
    """Block grid: A is split m x p, B is split p x n."""

    m: int
    p: int
    n: int

    def __post_init__(self):
        for name in ("m", "p", "n"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValidationError(f"partition parameter {name}={v!r} must be >= 1")

    def grid(self, side: str) -> tuple[int, int]:
        side = _side(side)
        return (self.m, self.p) if side == "A" else (self.p, self.n)

    def block_shape(self, shape: tuple[int, int], side: str) -> tuple[int, int]:
        rows, cols = shape
        gr, gc = self.grid(side)
        names = ("lambda", "omega") if _side(side) == "A" else ("omega", "gamma")
        pars = ("m", "p") if _side(side) == "A" else ("p", "n")
        for dim, g, dname, pname in ((rows, gr, names[0], pars[0]), (cols, gc, names[1], pars[1])):
            if dim % g:
                raise ValidationError(
                    f"{pname}={g} does not divide {dname}={dim} (no implicit padding)"
                )
        return rows // gr, cols // gc


def _side(side: str) -> str:
    s = str(side).upper().replace("-SIDE", "")
    if s not in ("A", "B"):
        raise ValidationError(f"side must be 'A' or 'B', got {side!r}")
    return s


@dataclass(frozen=True)
class BlockView:
    """Read-only view of one sub-block of a parent matrix."""

    parent: Matrix
    index: tuple[int, int]
    block_rows: int
    block_cols: int

    @property
    def field(self) -> FieldConfig:
        return self.parent.field

    @property
    def shape(self) -> tuple[int, int]:
        return self.block_rows, self.block_cols

    @property
    def data(self) -> np.ndarray:
        i, j = self.index
        h, w = self.block_rows, self.block_cols
        return self.parent.data[i * h : (i + 1) * h, j * w : (j + 1) * w]

    def to_matrix(self) -> Matrix:
        return Matrix._wrap(self.data, self.field)


def partition(mat: Matrix, spec: PartitionSpec, side: str) -> list[list[BlockView]]:
    """Split ``mat`` into the m x p (A-side) or p x n (B-side) grid of blocks."""
    h, w = spec.block_shape(mat.shape, side)
    gr, gc = spec.grid(side)
    return [[BlockView(mat, (i, j), h, w) for j in range(gc)] for i in range(gr)]


def assemble(grid) -> Matrix:
    """Inverse of :func:`partition`; accepts BlockViews or Matrices."""
    field = grid[0][0].field
    for row in grid:
        for blk in row:
            if blk.field != field:
                raise FieldMismatchError("blocks belong to different fields")
    data = np.block([[blk.data for blk in row] for row in grid])
    return Matrix._wrap(data, field)


def block_stack(mat: Matrix, spec: PartitionSpec, side: str) -> np.ndarray:
    """Blocks as one array of shape (grid_rows, grid_cols, h, w)."""
    h, w = spec.block_shape(mat.shape, side)
    gr, gc = spec.grid(side)
    return mat.data.reshape(gr, h, gc, w).transpose(0, 2, 1, 3)


def unstack_blocks(stack: np.ndarray, field: FieldConfig) -> Matrix:
    """Inverse of :func:`block_stack`."""
    gr, gc, h, w = stack.shape
    return Matrix._wrap(stack.transpose(0, 2, 1, 3).reshape(gr * h, gc * w), field)


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    """Exact product over F_q."""
    a._same_field(b)
    if a.cols != b.rows:
        raise ValidationError(f"dimension mismatch: {a.shape} @ {b.shape}")
    tally(a.rows * a.cols * b.cols)
    return Matrix._wrap(a.field.matmul(a.data, b.data), a.field)


def combine(field: FieldConfig, coeffs: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """Rows of ``coeffs`` applied to a stack of equal-shape arrays.

    ``coeffs`` has shape (k, L) and ``stack`` shape (L, h, w); the result has
    shape (k, h, w) with ``out[i] = sum_l coeffs[i, l] * stack[l]``.
    """
    L = stack.shape[0]
    inner = stack.shape[1:]
    coeffs = np.asarray(coeffs).reshape(-1, L)
    tally(coeffs.shape[0] * L * int(np.prod(inner, dtype=np.int64)))
    flat = field.matmul(coeffs, stack.reshape(L, -1))
    return flat.reshape((coeffs.shape[0],) + inner)


def block_linear_combination(blocks, coeffs) -> Matrix:
    """Return sum_i coeffs[i] * blocks[i]."""
    blocks = list(blocks)
    coeffs = list(coeffs)
    if not blocks:
        raise ValidationError("block_linear_combination needs at least one block")
    if len(blocks) != len(coeffs):
        raise ValidationError(
            f"got {len(blocks)} blocks but {len(coeffs)} coefficients"
        )
    field = blocks[0].field
    shape = blocks[0].shape
    for blk in blocks:
        if blk.field != field:
            raise FieldMismatchError("blocks belong to different fields")
        if blk.shape != shape:
            raise ValidationError(f"block shape mismatch: {blk.shape} vs {shape}")
    cvec = field.asarray([[field.embed_signed(c).value for c in coeffs]])
    stack = np.stack([blk.data for blk in blocks])
    return Matrix._wrap(combine(field, cvec, stack)[0], field)


def determinant(mat: Matrix) -> FieldElement:
    if mat.rows != mat.cols:
        raise ValidationError(f"determinant needs a square matrix, got {mat.shape}")
    return FieldElement(det_mod(mat.data.tolist(), mat.field.q), mat.field)


# -- FQMX binary format ---------------------------------------------------------


def to_fqmx_bytes(mat: Matrix) -> bytes:
    head = FQMX_MAGIC + bytes([FQMX_VERSION])
    head += struct.pack("<QQQ", mat.field.q, mat.rows, mat.cols)
    body = np.asarray([int(v) for v in mat.data.ravel()], dtype="<u8").tobytes()
    return head + body


def from_fqmx_bytes(blob: bytes) -> Matrix:
    if blob[:4] != FQMX_MAGIC:
        raise ValidationError("not an FQMX file (bad magic bytes)")
    if blob[4] != FQMX_VERSION:
        raise ValidationError(f"unsupported FQMX version {blob[4]}")
    q, rows, cols = struct.unpack_from("<QQQ", blob, 5)
    body = blob[29:]
    if len(body) != 8 * rows * cols:
        raise ValidationError(
            f"FQMX body holds {len(body)} bytes, expected {8 * rows * cols}"
        )
    field = FieldConfig(q)
    entries = np.frombuffer(body, dtype="<u8").reshape(rows, cols)
    if entries.size and int(entries.max()) >= q:
        raise ValidationError("FQMX entry is not reduced modulo q")
    return Matrix(entries.astype(object), field)


def write_fqmx(path, mat: Matrix) -> None:
    Path(path).write_bytes(to_fqmx_bytes(mat))


def read_fqmx(path) -> Matrix:
    return from_fqmx_bytes(Path(path).read_bytes())
