"""Private and secure (PSMM) and fully private (FPMM) matrix multiplication.

The master hides the index of the wanted library matrix by sending every
worker scalar query values, one per library block (polynomial codes) or per
library batch element (Lagrange codes). Each query polynomial is the code's
basis function for that block when the block belongs to the wanted matrix,
plus a random combination of the T noise basis functions. Summing the
library against the queries, each worker ends up holding an evaluation of::

    h_B(x) = (code of B^(theta)) + sum_t Z^B_t * (noise basis t)

with ``Z^B_t = sum_v sum_b B^(v)_b z^(v)_{b,t}``: all interference from the
other library matrices lands on the noise dimensions.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path

import numpy as np

from .bilinear import BilinearTensor, naive_tensor
from .costs import CostContext, CostReport, RunMetrics, cost_report
from .errors import FieldMismatchError, ValidationError
from .field import DEFAULT_MODULUS, FieldConfig
from .matrix import Matrix, PartitionSpec, block_stack, combine, read_fqmx, write_fqmx
from .ops import count_ops, tally
from .poly import EvaluationPoints, interpolation_weights
from .smm import (
    DecodePlan,
    DegreeAssignment,
    check_assignment,
    draw_noise,
    lagrange_encode_stack,
    poly_encode_stack,
    power_matrix,
    preset_assignment,
    recovery_threshold,
    smm_decode,
)

FAMILIES = ("poly", "lagrange")
PROBLEMS = ("SMM", "PSMM", "FPMM")


# -- libraries ------------------------------------------------------------------


class _Library:
    side = "B"

    def __init__(self, matrices, spec: PartitionSpec):
        matrices = tuple(matrices)
        if not matrices:
            raise ValidationError("a library needs at least one matrix")
        field = matrices[0].field
        shape = matrices[0].shape
        for mat in matrices:
            if mat.field != field:
                raise FieldMismatchError("library matrices belong to different fields")
            if mat.shape != shape:
                raise ValidationError(
                    f"library matrices must be identically dimensioned: {mat.shape} vs {shape}"
                )
        spec.block_shape(shape, self.side)
        self.matrices = matrices
        self.spec = spec
        self.field = field

    def __len__(self):
        return len(self.matrices)

    def __getitem__(self, v: int) -> Matrix:
        """1-based access."""
        return self.matrices[v - 1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrices[0].shape

    @property
    def block_shape(self) -> tuple[int, int]:
        return self.spec.block_shape(self.shape, self.side)

    @cached_property
    def blocks(self) -> np.ndarray:
        """Shape (count, blocks per matrix, h, w), blocks in row-major grid order."""
        h, w = self.block_shape
        return np.stack(
            [block_stack(mat, self.spec, self.side).reshape(-1, h, w) for mat in self.matrices]
        )

    @property
    def flat_blocks(self) -> np.ndarray:
        h, w = self.block_shape
        return self.blocks.reshape(-1, h, w)


class LibraryB(_Library):
    """V public matrices of dims omega x gamma, split p x n."""

    side = "B"

    @property
    def V(self) -> int:
        return len(self)


class LibraryA(_Library):
    """U public matrices of dims lambda x omega, split m x p."""

    side = "A"

    @property
    def U(self) -> int:
        return len(self)


def save_library(directory, lib: _Library) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for v, mat in enumerate(lib.matrices, start=1):
        name = f"{lib.side.lower()}{v}.fqmx"
        write_fqmx(d / name, mat)
        names.append(name)
    (d / "manifest.json").write_text(json.dumps({"matrices": names}, indent=1))


def load_library(directory, spec: PartitionSpec, side: str = "B") -> _Library:
    """Read a directory of FQMX files listed, in order, by ``manifest.json``."""
    d = Path(directory)
    try:
        manifest = json.loads((d / "manifest.json").read_text())
        names = manifest["matrices"]
    except FileNotFoundError:
        raise ValidationError(f"library directory {d} has no manifest.json") from None
    except KeyError:
        raise ValidationError("library manifest needs a 'matrices' list") from None
    mats = [read_fqmx(d / name) for name in names]
    cls = LibraryA if side.upper() == "A" else LibraryB
    return cls(mats, spec)


# -- queries --------------------------------------------------------------------


@dataclass
class QuerySet:
    """Per-worker query scalars.

    ``b`` has shape (N, V, p, n) for polynomial codes or (N, V, R) for
    Lagrange codes; ``a`` (FPMM only) has shape (N, U, m, p) or (N, U, R).
    Row i belongs to worker i+1.
    """

    family: str
    b: np.ndarray
    a: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.b.shape[0]

    @property
    def scalars_per_worker(self) -> int:
        count = int(np.prod(self.b.shape[1:]))
        if self.a is not None:
            count += int(np.prod(self.a.shape[1:]))
        return count

    def worker(self, i: int) -> dict:
        """Queries of worker ``i`` (1-based)."""
        out = {"b": self.b[i - 1]}
        if self.a is not None:
            out["a"] = self.a[i - 1]
        return out

    def to_json(self) -> dict:
        out = {"family": self.family, "b": self.b.astype(str).tolist()}
        if self.a is not None:
            out["a"] = self.a.astype(str).tolist()
        return out


def _check_index(name: str, value: int, upper: int):
    if not isinstance(value, (int, np.integer)) or not 1 <= value <= upper:
        raise ValidationError(f"{name}={value!r} out of range [1, {upper}]")


def _query_values(field, theta, count, base, noise_basis, z) -> np.ndarray:
    """q[i, v, l] = sum_t z[v, l, t] noise_basis[i, t] + [v == theta] base[i, l]."""
    N, L = base.shape
    T = noise_basis.shape[1]
    z = field.asarray(z)
    if z.shape != (count, L, T):
        raise ValidationError(f"query noise must have shape {(count, L, T)}, got {z.shape}")
    tally(count * L * T * N)
    vals = field.matmul(z.reshape(count * L, T), noise_basis.T).reshape(count, L, N)
    vals = np.ascontiguousarray(vals.transpose(2, 0, 1))
    vals[:, theta - 1, :] = (vals[:, theta - 1, :] + base) % field.q
    return vals


def _poly_bases(field, points, block_exps, noise_exps):
    return (
        power_matrix(field, points.alphas, block_exps),
        power_matrix(field, points.alphas, noise_exps),
    )


def _lagrange_bases(field, points, R, T):
    if not points.lagrange_mode or len(points.betas) != R + T:
        raise ValidationError(f"Lagrange queries need R+T={R + T} betas")
    W = interpolation_weights(field, points.betas, points.alphas)
    return W[:, :R], W[:, R:]


def _rank(tensor) -> int:
    return tensor.R if isinstance(tensor, BilinearTensor) else int(tensor)


def draw_query_noise(field: FieldConfig, rng, shape) -> np.ndarray:
    return field.random_array(np.random.default_rng(rng), tuple(shape))


def psmm_poly_queries(theta, assign: DegreeAssignment, V, points: EvaluationPoints, noise=None, rng=None) -> QuerySet:
    """Query values ``q^(v)_lj(alpha_i)``; ``noise`` has shape (V, p, n, T)."""
    _check_index("theta", theta, V)
    field = points.field
    p, n, T = assign.p, assign.n, assign.T
    if noise is None:
        noise = draw_query_noise(field, rng, (V, p, n, T))
    base, nb = _poly_bases(field, points, assign.b_flat, assign.d)
    z = field.asarray(noise).reshape(V, p * n, T)
    q = _query_values(field, theta, V, base, nb, z)
    return QuerySet("poly", q.reshape(points.N, V, p, n))


def psmm_lagrange_queries(theta, tensor, V, T, points: EvaluationPoints, noise=None, rng=None) -> QuerySet:
    """Query values ``q^(v)_r(alpha_i)``; ``noise`` has shape (V, R, T)."""
    _check_index("theta", theta, V)
    field = points.field
    R = _rank(tensor)
    if noise is None:
        noise = draw_query_noise(field, rng, (V, R, T))
    base, nb = _lagrange_bases(field, points, R, T)
    return QuerySet("lagrange", _query_values(field, theta, V, base, nb, noise))


def fpmm_poly_queries(theta1, theta2, assign: DegreeAssignment, U, V, points: EvaluationPoints, noise=None, rng=None) -> QuerySet:
    """``rho^(u)_kl(alpha_i)`` and ``q^(v)_lj(alpha_i)``.

    ``noise`` is a pair (z_a, z_b) of shapes (U, m, p, T) and (V, p, n, T).
    """
    _check_index("theta1", theta1, U)
    _check_index("theta2", theta2, V)
    field = points.field
    m, p, n, T = assign.m, assign.p, assign.n, assign.T
    rng = np.random.default_rng(rng)
    if noise is None:
        noise = (
            draw_query_noise(field, rng, (U, m, p, T)),
            draw_query_noise(field, rng, (V, p, n, T)),
        )
    z_a, z_b = noise
    base_a, nb_a = _poly_bases(field, points, assign.a_flat, assign.c)
    qa = _query_values(field, theta1, U, base_a, nb_a, field.asarray(z_a).reshape(U, m * p, T))
    base_b, nb_b = _poly_bases(field, points, assign.b_flat, assign.d)
    qb = _query_values(field, theta2, V, base_b, nb_b, field.asarray(z_b).reshape(V, p * n, T))
    N = points.N
    return QuerySet("poly", qb.reshape(N, V, p, n), qa.reshape(N, U, m, p))


def fpmm_lagrange_queries(theta1, theta2, tensor, U, V, T, points: EvaluationPoints, noise=None, rng=None) -> QuerySet:
    """``rho^(u)_r(alpha_i)`` and ``q^(v)_r(alpha_i)``; noise shapes (U, R, T), (V, R, T)."""
    _check_index("theta1", theta1, U)
    _check_index("theta2", theta2, V)
    field = points.field
    R = _rank(tensor)
    rng = np.random.default_rng(rng)
    if noise is None:
        noise = (
            draw_query_noise(field, rng, (U, R, T)),
            draw_query_noise(field, rng, (V, R, T)),
        )
    z_a, z_b = noise
    base, nb = _lagrange_bases(field, points, R, T)
    qa = _query_values(field, theta1, U, base, nb, z_a)
    qb = _query_values(field, theta2, V, base, nb, z_b)
    return QuerySet("lagrange", qb, qa)


# -- worker side ----------------------------------------------------------------


def _library_coeffs(lib: _Library, query: np.ndarray, tensor: BilinearTensor | None) -> np.ndarray:
    """Per-raw-block coefficients (1, count * blocks) for a worker's query."""
    field = lib.field
    count = len(lib)
    per = lib.blocks.shape[1]
    q = field.asarray(query).reshape(count, -1)
    if tensor is None:
        if q.shape[1] != per:
            raise ValidationError(f"expected {count * per} query scalars, got {q.size}")
        return q.reshape(1, -1)
    if q.shape[1] != tensor.R:
        raise ValidationError(f"expected {count * tensor.R} query scalars, got {q.size}")
    # sum_r q[v, r] * (batch element r of matrix v), folded onto raw blocks
    coeffs = tensor.coeffs_a(field) if lib.side == "A" else tensor.coeffs_b(field)
    if coeffs.shape[1] != per:
        raise ValidationError("tensor shape does not match the library partition")
    tally(count * tensor.R * per)
    return field.matmul(q, coeffs).reshape(1, -1)


def worker_encode(lib: _Library, query: np.ndarray, tensor: BilinearTensor | None = None) -> Matrix:
    coeffs = _library_coeffs(lib, query, tensor)
    return Matrix._wrap(combine(lib.field, coeffs, lib.flat_blocks)[0], lib.field)


def psmm_worker_encode_B(lib: LibraryB, query: np.ndarray, tensor: BilinearTensor | None = None) -> Matrix:
    """``B~_i = sum_v sum_lj B^(v)_lj q^(v)_lj(alpha_i)`` (or the batch form for Lagrange)."""
    return worker_encode(lib, query, tensor)


def fpmm_worker_encode_A(lib: LibraryA, query: np.ndarray, tensor: BilinearTensor | None = None) -> Matrix:
    return worker_encode(lib, query, tensor)


def worker_response(A_share: Matrix, B_share: Matrix) -> Matrix:
    return A_share @ B_share


# -- master-side aligned forms (test and audit oracles) -------------------------


def aligned_noise(lib: _Library, z: np.ndarray, tensor: BilinearTensor | None = None) -> np.ndarray:
    """Z_t = sum_v sum_b (block or batch element b of matrix v) * z[v, b, t]."""
    field = lib.field
    count = len(lib)
    z = field.asarray(z).reshape(count, -1, np.shape(z)[-1])
    T = z.shape[-1]
    if tensor is None:
        return combine(field, z.reshape(-1, T).T, lib.flat_blocks)
    coeffs = tensor.coeffs_a(field) if lib.side == "A" else tensor.coeffs_b(field)
    h, w = lib.block_shape
    batches = np.stack([combine(field, coeffs, lib.blocks[v]) for v in range(count)])
    return combine(field, z.reshape(-1, T).T, batches.reshape(-1, h, w))


def aligned_shares(
    lib: _Library,
    theta: int,
    z: np.ndarray,
    points: EvaluationPoints,
    assign: DegreeAssignment | None = None,
    tensor: BilinearTensor | None = None,
) -> np.ndarray:
    """Evaluations at every alpha of the aligned encoding function (h_B or f_A).

    This needs the whole library together with the query noise, which the
    master does not combine in the real protocol; it exists to check the
    alignment identity.
    """
    field = lib.field
    Z = aligned_noise(lib, z, tensor)
    own = lib.blocks[theta - 1]
    if tensor is None:
        exps = assign.a_flat if lib.side == "A" else assign.b_flat
        noise_exps = assign.c if lib.side == "A" else assign.d
        return poly_encode_stack(field, own, exps, Z, noise_exps, points.alphas)
    coeffs = tensor.coeffs_a(field) if lib.side == "A" else tensor.coeffs_b(field)
    return lagrange_encode_stack(field, combine(field, coeffs, own), Z, points)


# -- strategy runs --------------------------------------------------------------


@dataclass
class StrategyConfig:
    """Parameters shared by every strategy run.

    ``variant`` picks a preset polynomial assignment (V1, V2, V3 or min)
    unless ``assignment`` is given; ``tensor`` defaults to the naive
    tensor for the partition. ``N`` defaults to the recovery threshold.
    """

    spec: PartitionSpec
    T: int
    N: int | None = None
    field: FieldConfig = dc_field(default_factory=lambda: FieldConfig(DEFAULT_MODULUS))
    variant: str = "min"
    assignment: DegreeAssignment | None = None
    tensor: BilinearTensor | None = None
    seed: int | None = 0
    points: EvaluationPoints | None = None

    def __post_init__(self):
        if not isinstance(self.T, int) or self.T < 1:
            raise ValidationError(f"T={self.T!r} must be an integer >= 1")
        if self.N is not None and (not isinstance(self.N, int) or self.N < 1):
            raise ValidationError(f"N={self.N!r} must be a positive integer")

    def resolve(self, family: str) -> _Resolved:
        if family not in FAMILIES:
            raise ValidationError(f"family must be one of {FAMILIES}, got {family!r}")
        spec, T = self.spec, self.T
        if family == "poly":
            assign = self.assignment
            if assign is None:
                v = str(self.variant).upper()
                if v in ("MIN", "POLY-MIN"):
                    rep = recovery_threshold("poly-min", spec.m, spec.p, spec.n, T)
                    v = rep.family.split("-")[1].upper()
                assign = preset_assignment(v, spec.m, spec.p, spec.n, T)
            if assign.T != T:
                raise ValidationError(f"assignment has T={assign.T}, config has T={T}")
            K = assign.K
            N = self.N if self.N is not None else K
            points = self.points or EvaluationPoints.default_poly(self.field, N)
            if points.N != N:
                raise ValidationError(f"config N={N} but {points.N} evaluation points given")
            check_assignment(assign, spec, points)
            plan = DecodePlan.for_poly(assign, points)
            return _Resolved(family, assign, None, K, N, points, plan)
        tensor = self.tensor or naive_tensor(spec.m, spec.p, spec.n)
        if tensor.shape != (spec.m, spec.p, spec.n):
            raise ValidationError(
                f"tensor shape {tensor.shape} does not match partition {(spec.m, spec.p, spec.n)}"
            )
        K = 2 * tensor.R + 2 * T - 1
        N = self.N if self.N is not None else K
        points = self.points or EvaluationPoints.default_lagrange(self.field, N, tensor.R, T)
        if points.N != N:
            raise ValidationError(f"config N={N} but {points.N} evaluation points given")
        plan = DecodePlan.for_lagrange(tensor, T, points)
        return _Resolved(family, None, tensor, K, N, points, plan)

    def to_json(self) -> dict:
        return {
            "m": self.spec.m,
            "p": self.spec.p,
            "n": self.spec.n,
            "T": self.T,
            "N": self.N,
            "modulus": self.field.q,
            "variant": self.variant,
            "assignment": self.assignment.to_json() if self.assignment else None,
            "tensor": self.tensor.name if self.tensor else None,
            "seed": self.seed,
        }


@dataclass
class _Resolved:
    family: str
    assign: DegreeAssignment | None
    tensor: BilinearTensor | None
    K: int
    N: int
    points: EvaluationPoints
    plan: DecodePlan


@dataclass
class StrategyRun:
    """Transcript of one sharing / computation / reconstruction round."""

    problem: str
    family: str
    config: dict
    K: int
    N: int
    theta: tuple
    queries: QuerySet | None
    A_shares: np.ndarray | None
    B_shares: np.ndarray | None
    worker_A: dict
    worker_B: dict
    responses: dict
    used: list
    C: Matrix
    metrics: RunMetrics
    cost: CostReport
    plan: DecodePlan = dc_field(repr=False)
    private: dict = dc_field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        def dec(x):
            return x.astype(str).tolist()

        return {
            "problem": self.problem,
            "family": self.family,
            "config": self.config,
            "K": self.K,
            "N": self.N,
            "theta": list(self.theta),
            "queries": self.queries.to_json() if self.queries is not None else None,
            "A_shares": dec(self.A_shares) if self.A_shares is not None else None,
            "B_shares": dec(self.B_shares) if self.B_shares is not None else None,
            "worker_A": {str(i): dec(x) for i, x in sorted(self.worker_A.items())},
            "worker_B": {str(i): dec(x) for i, x in sorted(self.worker_B.items())},
            "responses": {str(i): dec(y.data) for i, y in sorted(self.responses.items())},
            "used": list(self.used),
            "C": dec(self.C.data),
            "metrics": self.metrics.to_json(),
            "cost": self.cost.to_json(),
        }


def _serial_map(fn, items):
    return [fn(x) for x in items]


def _run(problem, family, config, res: _Resolved, master, worker, theta, dims, responders, map_fn):
    """Shared pipeline: master phase, worker phase, decode, accounting.

    ``master()`` returns (queries, A_shares, B_shares); ``worker(i, queries,
    A_shares, B_shares)`` returns (A~_i, B~_i) arrays for worker i.
    """
    field = config.field
    metrics = RunMetrics()
    t0 = time.perf_counter()
    with count_ops() as enc:
        queries, A_shares, B_shares = master()
    metrics.encode_ops = enc.count
    t1 = time.perf_counter()

    N = res.N
    ids = list(range(1, N + 1)) if responders is None else [int(i) for i in responders]
    for i in ids:
        if not 1 <= i <= N:
            raise ValidationError(f"responder id {i} outside [1, {N}]")
    if len(set(ids)) != len(ids):
        raise ValidationError("responder ids must be unique")

    def task(i):
        with count_ops() as ops:
            a_i, b_i = worker(i, queries, A_shares, B_shares)
            y = Matrix._wrap(field.matmul(a_i, b_i), field)
            tally(a_i.shape[0] * a_i.shape[1] * b_i.shape[1])
        return i, a_i, b_i, y, ops.count

    results = (map_fn or _serial_map)(task, ids)
    t2 = time.perf_counter()
    worker_A, worker_B, responses = {}, {}, {}
    order = []
    for i, a_i, b_i, y, ops in results:
        order.append(i)
        responses[i] = y
        metrics.worker_ops[i] = ops
        if problem == "FPMM":
            worker_A[i] = a_i
        if problem != "SMM":
            worker_B[i] = b_i
    used = order[: res.K]
    with count_ops() as dec:
        C = smm_decode([(i, responses[i]) for i in order], res.plan)
    t3 = time.perf_counter()
    metrics.decode_ops = dec.count
    metrics.responses_used = used
    lam, omega, gamma = dims
    spec = config.spec
    h_a, w_a = lam // spec.m, omega // spec.p
    h_c, w_c = lam // spec.m, gamma // spec.n
    metrics.uploaded_symbols = 0 if A_shares is None else N * h_a * w_a
    metrics.query_scalars = 0 if queries is None else N * queries.scalars_per_worker
    metrics.downloaded_symbols = res.K * h_c * w_c
    metrics.seconds = {"encode": t1 - t0, "worker": t2 - t1, "decode": t3 - t2}
    ctx = CostContext(problem, family, spec.m, spec.p, spec.n, N, res.K, lam, omega, gamma)
    cost = cost_report(metrics, ctx)
    echo = config.to_json()
    echo["N"] = N
    return StrategyRun(
        problem,
        family,
        echo,
        res.K,
        N,
        tuple(theta),
        queries,
        A_shares,
        B_shares,
        worker_A,
        worker_B,
        responses,
        used,
        C,
        metrics,
        cost,
        res.plan,
    )


def _a_side_encode(field, A: Matrix, res: _Resolved, spec, za):
    sa = block_stack(A, spec, "A")
    h, w = sa.shape[2:]
    sa = sa.reshape(-1, h, w)
    if res.family == "poly":
        return poly_encode_stack(field, sa, res.assign.a_flat, za, res.assign.c, res.points.alphas)
    batch = combine(field, res.tensor.coeffs_a(field), sa)
    return lagrange_encode_stack(field, batch, za, res.points)


def _b_side_encode(field, B: Matrix, res: _Resolved, spec, zb):
    sb = block_stack(B, spec, "B")
    h, w = sb.shape[2:]
    sb = sb.reshape(-1, h, w)
    if res.family == "poly":
        return poly_encode_stack(field, sb, res.assign.b_flat, zb, res.assign.d, res.points.alphas)
    batch = combine(field, res.tensor.coeffs_b(field), sb)
    return lagrange_encode_stack(field, batch, zb, res.points)


def _check_field(config: StrategyConfig, *mats):
    for mat in mats:
        if mat.field != config.field:
            raise FieldMismatchError(
                f"input over F_{mat.field.q} but config uses F_{config.field.q}"
            )


def smm_run(A: Matrix, B: Matrix, family: str, config: StrategyConfig, responders=None, map_fn=None) -> StrategyRun:
    """Plain SMM: both inputs are secret-shared by the master."""
    _check_field(config, A, B)
    spec = config.spec
    if A.cols != B.rows:
        raise ValidationError(f"dimension mismatch: {A.shape} @ {B.shape}")
    spec.block_shape(A.shape, "A")
    spec.block_shape(B.shape, "B")
    res = config.resolve(family)
    field = config.field
    rng = np.random.default_rng(config.seed)
    h_a, w_a = spec.block_shape(A.shape, "A")
    h_b, w_b = spec.block_shape(B.shape, "B")
    za = draw_noise(field, rng, config.T, (h_a, w_a))
    zb = draw_noise(field, rng, config.T, (h_b, w_b))

    def master():
        return None, _a_side_encode(field, A, res, spec, za), _b_side_encode(field, B, res, spec, zb)

    def worker(i, queries, A_shares, B_shares):
        return A_shares[i - 1], B_shares[i - 1]

    run = _run("SMM", family, config, res, master, worker, (), (A.rows, A.cols, B.cols), responders, map_fn)
    run.private = {"Z_A": za, "Z_B": zb}
    return run


def psmm_run(
    A: Matrix, lib: LibraryB, theta: int, family: str, config: StrategyConfig, responders=None, map_fn=None
) -> StrategyRun:
    """Compute ``A B^(theta)`` with A secure and theta private."""
    _check_field(config, A, *lib.matrices)
    spec = config.spec
    if lib.spec != spec:
        raise ValidationError("library partition differs from the config partition")
    if A.cols != lib.shape[0]:
        raise ValidationError(f"dimension mismatch: {A.shape} @ {lib.shape}")
    spec.block_shape(A.shape, "A")
    V = lib.V
    _check_index("theta", theta, V)
    res = config.resolve(family)
    field = config.field
    T = config.T
    rng = np.random.default_rng(config.seed)
    za = draw_noise(field, rng, T, spec.block_shape(A.shape, "A"))
    if family == "poly":
        zb = draw_query_noise(field, rng, (V, spec.p, spec.n, T))
    else:
        zb = draw_query_noise(field, rng, (V, res.tensor.R, T))

    def master():
        if family == "poly":
            q = psmm_poly_queries(theta, res.assign, V, res.points, noise=zb)
        else:
            q = psmm_lagrange_queries(theta, res.tensor, V, T, res.points, noise=zb)
        return q, _a_side_encode(field, A, res, spec, za), None

    def worker(i, queries, A_shares, B_shares):
        b_i = worker_encode(lib, queries.worker(i)["b"], res.tensor)
        return A_shares[i - 1], b_i.data

    run = _run(
        "PSMM", family, config, res, master, worker, (theta,), (A.rows, A.cols, lib.shape[1]), responders, map_fn
    )
    run.config["V"] = V
    run.private = {"Z_A": za, "z_B": zb}
    return run


def fpmm_run(
    libA: LibraryA,
    libB: LibraryB,
    theta1: int,
    theta2: int,
    family: str,
    config: StrategyConfig,
    responders=None,
    map_fn=None,
) -> StrategyRun:
    """Compute ``A^(theta1) B^(theta2)`` with both indices private."""
    _check_field(config, *libA.matrices, *libB.matrices)
    spec = config.spec
    if libA.spec != spec or libB.spec != spec:
        raise ValidationError("library partition differs from the config partition")
    if libA.shape[1] != libB.shape[0]:
        raise ValidationError(f"dimension mismatch: {libA.shape} @ {libB.shape}")
    U, V = libA.U, libB.V
    _check_index("theta1", theta1, U)
    _check_index("theta2", theta2, V)
    res = config.resolve(family)
    field = config.field
    T = config.T
    rng = np.random.default_rng(config.seed)
    if family == "poly":
        z_a = draw_query_noise(field, rng, (U, spec.m, spec.p, T))
        z_b = draw_query_noise(field, rng, (V, spec.p, spec.n, T))
    else:
        z_a = draw_query_noise(field, rng, (U, res.tensor.R, T))
        z_b = draw_query_noise(field, rng, (V, res.tensor.R, T))

    def master():
        if family == "poly":
            q = fpmm_poly_queries(theta1, theta2, res.assign, U, V, res.points, noise=(z_a, z_b))
        else:
            q = fpmm_lagrange_queries(theta1, theta2, res.tensor, U, V, T, res.points, noise=(z_a, z_b))
        return q, None, None

    def worker(i, queries, A_shares, B_shares):
        qi = queries.worker(i)
        a_i = worker_encode(libA, qi["a"], res.tensor)
        b_i = worker_encode(libB, qi["b"], res.tensor)
        return a_i.data, b_i.data

    dims = (libA.shape[0], libA.shape[1], libB.shape[1])
    run = _run("FPMM", family, config, res, master, worker, (theta1, theta2), dims, responders, map_fn)
    run.config["U"] = U
    run.config["V"] = V
    run.private = {"z_A": z_a, "z_B": z_b}
    return run


def query_size(problem: str, family: str, m: int, p: int, n: int, R: int | None, V: int, U: int = 0) -> int:
    """Closed-form number of query scalars per worker."""
    if family == "poly":
        size = V * p * n
        return size + (U * m * p if problem == "FPMM" else 0)
    return (V + (U if problem == "FPMM" else 0)) * R
