"""Secure matrix multiplication codes.

Polynomial codes encode ``A`` and ``B`` as::

    f(x) = sum A_kl x^{a_kl} + sum_t Z^A_t x^{c_t}
    h(x) = sum B_lj x^{b_lj} + sum_t Z^B_t x^{d_t}

and workers return ``f(alpha_i) h(alpha_i)``. Decodability (C1) asks that each
C_kj appear alone as one coefficient of f*h; security (C2) asks that every
T x T matrix of noise powers be invertible. Lagrange codes instead
interpolate a bilinear batch through points beta_1..beta_{R+T}.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field as dc_field

import numpy as np

from .bilinear import BilinearTensor, encode_stack
from .costs import CostReport  # noqa: F401  (re-exported)
from .errors import BelowThresholdError, ValidationError
from .field import FieldConfig, det_mod
from .matrix import Matrix, PartitionSpec, assemble, block_stack, combine
from .poly import (
    EvaluationPoints,
    MatrixPolynomial,
    interpolation_matrix,
    interpolation_weights,
)

VARIANTS = ("V1", "V2", "V3")
C2_EXHAUSTIVE_LIMIT = 200_000


# -- degree assignments ---------------------------------------------------------


@dataclass(frozen=True)
class DegreeAssignment:
    """Exponents a (m x p), b (p x n), c (T) and d (T) of a polynomial code."""

    a: tuple
    b: tuple
    c: tuple
    d: tuple
    name: str = "custom"

    def __post_init__(self):
        a = tuple(tuple(int(v) for v in row) for row in self.a)
        b = tuple(tuple(int(v) for v in row) for row in self.b)
        c = tuple(int(v) for v in self.c)
        d = tuple(int(v) for v in self.d)
        for attr, val in (("a", a), ("b", b), ("c", c), ("d", d)):
            object.__setattr__(self, attr, val)
        if not a or not a[0] or any(len(r) != len(a[0]) for r in a):
            raise ValidationError("exponents a must form a non-empty m x p grid")
        if len(b) != len(a[0]) or not b[0] or any(len(r) != len(b[0]) for r in b):
            raise ValidationError("exponents b must form a p x n grid matching a")
        if len(c) < 1:
            raise ValidationError("T >= 1 noise terms are required (T=0 is not supported)")
        if len(c) != len(d):
            raise ValidationError(f"c and d must both have length T, got {len(c)} and {len(d)}")
        flat = [v for row in a for v in row] + [v for row in b for v in row] + list(c) + list(d)
        if any(v < 0 for v in flat):
            raise ValidationError("all exponents must be non-negative")
        if len(set(c)) != len(c):
            raise ValidationError(f"c exponents must be pairwise distinct, got {c}")
        if len(set(d)) != len(d):
            raise ValidationError(f"d exponents must be pairwise distinct, got {d}")

    @property
    def m(self) -> int:
        return len(self.a)

    @property
    def p(self) -> int:
        return len(self.b)

    @property
    def n(self) -> int:
        return len(self.b[0])

    @property
    def T(self) -> int:
        return len(self.c)

    @property
    def a_flat(self) -> list[int]:
        return [v for row in self.a for v in row]

    @property
    def b_flat(self) -> list[int]:
        return [v for row in self.b for v in row]

    @property
    def deg_f(self) -> int:
        return max(self.a_flat + list(self.c))

    @property
    def deg_h(self) -> int:
        return max(self.b_flat + list(self.d))

    @property
    def K(self) -> int:
        return self.deg_f + self.deg_h + 1

    def to_json(self) -> dict:
        return {
            "a": [list(r) for r in self.a],
            "b": [list(r) for r in self.b],
            "c": list(self.c),
            "d": list(self.d),
        }

    @classmethod
    def from_json(cls, obj: dict) -> DegreeAssignment:
        try:
            return cls(obj["a"], obj["b"], obj["c"], obj["d"])
        except KeyError as exc:
            raise ValidationError(f"explicit assignment is missing key {exc}") from None


def _check_params(m, p, n, T):
    for name, v in (("m", m), ("p", p), ("n", n)):
        if not isinstance(v, int) or v < 1:
            raise ValidationError(f"{name}={v!r} must be an integer >= 1")
    if not isinstance(T, int) or T < 1:
        raise ValidationError(f"T={T!r} must be an integer >= 1")


def preset_assignment(variant: str, m: int, p: int, n: int, T: int) -> DegreeAssignment:
    """The three closed-form assignments (indices below are 1-based)."""
    _check_params(m, p, n, T)
    v = str(variant).upper()
    rng_m, rng_p, rng_n, rng_t = (range(1, x + 1) for x in (m, p, n, T))
    if v == "V1":
        a = [[(k - 1) * (n * p + T) + l - 1 for l in rng_p] for k in rng_m]
        b = [[j * p - l for j in rng_n] for l in rng_p]
        c = [(m - 1) * (n * p + T) + n * p + t - 1 for t in rng_t]
        d = [n * p + t - 1 for t in rng_t]
    elif v == "V2":
        a = [[(k - 1) * p + l - 1 for l in rng_p] for k in rng_m]
        b = [[(j - 1) * (m * p + T) + p - l for j in rng_n] for l in rng_p]
        c = [m * p + t - 1 for t in rng_t]
        d = [(n - 1) * (m * p + T) + m * p + t - 1 for t in rng_t]
    elif v == "V3":
        a = [[(k - 1) * n * p + l - 1 for l in rng_p] for k in rng_m]
        b = [[j * p - l for j in rng_n] for l in rng_p]
        c = [m * p * n + t - 1 for t in rng_t]
        d = list(c)
    else:
        raise ValidationError(f"unknown assignment variant {variant!r}; expected V1, V2 or V3")
    return DegreeAssignment(a, b, c, d, name=v)


def preset_threshold(variant: str, m: int, p: int, n: int, T: int) -> int:
    v = str(variant).upper()
    if v == "V1":
        return (m + 1) * (n * p + T) - 1
    if v == "V2":
        return (n + 1) * (m * p + T) - 1
    if v == "V3":
        return 2 * m * p * n + 2 * T - 1
    raise ValidationError(f"unknown assignment variant {variant!r}")


# -- C1 / C2 --------------------------------------------------------------------


@dataclass
class C1Report:
    ok: bool
    exponent_map: list | None = None
    failure: dict | None = None

    def __bool__(self):
        return self.ok


def verify_c1(assign: DegreeAssignment) -> C1Report:
    """Expand f*h over formal block symbols and locate each C_kj.

    On success ``exponent_map[k][j]`` (0-based k, j) is the exponent whose
    coefficient is exactly ``sum_l A_kl B_lj``.
    """
    m, p, n, T = assign.m, assign.p, assign.n, assign.T
    f_terms = [((assign.a[k][l]), ("A", k, l)) for k in range(m) for l in range(p)]
    f_terms += [(assign.c[t], ("ZA", t)) for t in range(T)]
    h_terms = [((assign.b[l][j]), ("B", l, j)) for l in range(p) for j in range(n)]
    h_terms += [(assign.d[t], ("ZB", t)) for t in range(T)]
    by_exp = defaultdict(list)
    for ef, sf in f_terms:
        for eh, sh in h_terms:
            by_exp[ef + eh].append((sf, sh))

    def label(pair):
        out = []
        for s in pair:
            if s[0] in ("A", "B"):
                out.append(f"{s[0]}[{s[1] + 1},{s[2] + 1}]")
            else:
                out.append(f"Z{s[0][1]}[{s[1] + 1}]")
        return "*".join(out)

    emap = [[None] * n for _ in range(m)]
    for k in range(m):
        for j in range(n):
            exps = {assign.a[k][l] + assign.b[l][j] for l in range(p)}
            if len(exps) != 1:
                return C1Report(
                    False,
                    failure={
                        "block": [k + 1, j + 1],
                        "reason": "sub-products of C_kj fall on different exponents",
                        "exponents": sorted(exps),
                    },
                )
            e = exps.pop()
            want = {(("A", k, l), ("B", l, j)) for l in range(p)}
            got = by_exp[e]
            if len(got) != len(want) or set(got) != want:
                extra = [label(t) for t in got if t not in want]
                return C1Report(
                    False,
                    failure={
                        "block": [k + 1, j + 1],
                        "reason": "exponent collision",
                        "exponent": e,
                        "colliding_terms": extra,
                    },
                )
            emap[k][j] = e
    return C1Report(True, exponent_map=emap)


@dataclass
class C2Report:
    ok: bool
    methods: dict
    subsets_checked: int = 0
    singular: dict | None = None

    def __bool__(self):
        return self.ok


def _is_consecutive(exps) -> bool:
    s = sorted(exps)
    return all(b == a + 1 for a, b in zip(s, s[1:]))


def noise_power_singular(field: FieldConfig, alphas, exps, subsets):
    """First subset whose matrix [alpha_i^e_t] is singular, and how many were checked."""
    q = field.q
    count = 0
    for sub in subsets:
        count += 1
        rows = [[pow(alphas[i], e, q) for e in exps] for i in sub]
        if det_mod(rows, q) == 0:
            return sub, count
    return None, count


def t_subsets(N: int, T: int, exhaustive: bool, samples: int, rng):
    if exhaustive:
        return itertools.combinations(range(N), T)
    rng = np.random.default_rng(rng)
    return (tuple(sorted(rng.choice(N, size=T, replace=False).tolist())) for _ in range(samples))


def verify_c2(
    assign: DegreeAssignment,
    points: EvaluationPoints,
    exhaustive: bool = True,
    samples: int = 1000,
    rng=None,
    shortcut: bool = True,
) -> C2Report:
    """Invertibility of [alpha_i^{c_t}] and [alpha_i^{d_t}] for T-subsets of workers.

    Consecutive exponents give ``diag(alpha^base)`` times a Vandermonde
    matrix, which is invertible for distinct nonzero points; with
    ``shortcut`` that case is accepted without computing determinants.
    """
    T = assign.T
    N = points.N
    alphas = points.alphas
    if 0 in alphas or len(set(alphas)) != N:
        raise ValidationError("C2 needs pairwise distinct nonzero alphas")
    if T > N:
        return C2Report(False, {}, 0, {"reason": f"T={T} exceeds N={N}"})
    methods = {}
    total = 0
    for side, exps in (("c", assign.c), ("d", assign.d)):
        if shortcut and _is_consecutive(exps):
            methods[side] = "consecutive"
            continue
        ex = exhaustive and math.comb(N, T) <= C2_EXHAUSTIVE_LIMIT
        methods[side] = "exhaustive" if ex else "sampled"
        subs = t_subsets(N, T, ex, samples, rng)
        bad, count = noise_power_singular(points.field, alphas, exps, subs)
        total += count
        if bad is not None:
            return C2Report(
                False,
                methods,
                total,
                {"side": side, "workers": [i + 1 for i in bad]},
            )
    return C2Report(True, methods, total)


# -- noise ----------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseBlock:
    kind: str  # "A" or "B"
    t: int  # 1-based
    matrix: Matrix


def draw_noise(field: FieldConfig, rng, T: int, shape) -> np.ndarray:
    """T i.i.d. uniform noise blocks as an array of shape (T, h, w)."""
    return field.random_array(np.random.default_rng(rng), (T,) + tuple(shape))


def _noise_array(field, noise, T, shape, rng) -> np.ndarray:
    if noise is None:
        return draw_noise(field, rng, T, shape)
    arr = np.stack([x.data if isinstance(x, Matrix) else field.asarray(x) for x in noise])
    if arr.shape != (T,) + tuple(shape):
        raise ValidationError(f"noise must have shape {(T,) + tuple(shape)}, got {arr.shape}")
    return field.asarray(arr)


# -- array-level encoders -------------------------------------------------------


def power_matrix(field: FieldConfig, alphas, exps) -> np.ndarray:
    q = field.q
    return field.asarray([[pow(int(a), int(e), q) for e in exps] for a in alphas])


def poly_encode_stack(field, blocks, block_exps, noise, noise_exps, alphas) -> np.ndarray:
    """Evaluations at every alpha of ``sum blocks[i] x^e_i + sum noise[t] x^c_t``."""
    E = power_matrix(field, alphas, list(block_exps) + list(noise_exps))
    return combine(field, E, np.concatenate([blocks, noise]))


def lagrange_encode_stack(field, batch, noise, points: EvaluationPoints) -> np.ndarray:
    """Evaluations at alphas of the interpolant through (beta_r, batch/noise)."""
    W = interpolation_weights(field, points.betas, points.alphas)
    return combine(field, W, np.concatenate([batch, noise]))


def sparse_poly(field, stack, exps, shape) -> MatrixPolynomial:
    out = np.zeros((max(exps) + 1,) + tuple(shape), dtype=field.dtype)
    for blk, e in zip(stack, exps):
        out[e] = (out[e] + blk) % field.q
    return MatrixPolynomial.from_stack(out, field)


# -- SMM encoders ---------------------------------------------------------------


@dataclass
class SMMShares:
    A_shares: list
    B_shares: list
    noise_A: list
    noise_B: list
    f: MatrixPolynomial | None = None
    h: MatrixPolynomial | None = None


def check_assignment(assign: DegreeAssignment, spec: PartitionSpec, points: EvaluationPoints) -> C1Report:
    if (assign.m, assign.p, assign.n) != (spec.m, spec.p, spec.n):
        raise ValidationError(
            f"assignment shape {(assign.m, assign.p, assign.n)} does not match partition "
            f"{(spec.m, spec.p, spec.n)}"
        )
    c1 = verify_c1(assign)
    if not c1.ok:
        raise ValidationError(f"assignment violates C1: {c1.failure}")
    c2 = verify_c2(assign, points, exhaustive=True, samples=1000, rng=0)
    if not c2.ok:
        raise ValidationError(f"assignment violates C2: {c2.singular}")
    return c1


def _rng(noise_seed):
    return np.random.default_rng(noise_seed)


def smm_poly_encode(
    A: Matrix,
    B: Matrix,
    assign: DegreeAssignment,
    spec: PartitionSpec,
    points: EvaluationPoints,
    noise_seed=None,
    noise_A=None,
    noise_B=None,
) -> SMMShares:
    field = A.field
    if points.lagrange_mode:
        raise ValidationError("polynomial codes need polynomial-mode evaluation points")
    check_assignment(assign, spec, points)
    if A.cols != B.rows:
        raise ValidationError(f"dimension mismatch: {A.shape} @ {B.shape}")
    T = assign.T
    sa = block_stack(A, spec, "A")
    sb = block_stack(B, spec, "B")
    shape_a, shape_b = sa.shape[2:], sb.shape[2:]
    sa = sa.reshape((-1,) + shape_a)
    sb = sb.reshape((-1,) + shape_b)
    rng = _rng(noise_seed)
    za = _noise_array(field, noise_A, T, shape_a, rng)
    zb = _noise_array(field, noise_B, T, shape_b, rng)
    ea = poly_encode_stack(field, sa, assign.a_flat, za, assign.c, points.alphas)
    eb = poly_encode_stack(field, sb, assign.b_flat, zb, assign.d, points.alphas)
    f = sparse_poly(field, np.concatenate([sa, za]), assign.a_flat + list(assign.c), shape_a)
    h = sparse_poly(field, np.concatenate([sb, zb]), assign.b_flat + list(assign.d), shape_b)
    return SMMShares(
        [Matrix._wrap(x, field) for x in ea],
        [Matrix._wrap(x, field) for x in eb],
        [NoiseBlock("A", t + 1, Matrix._wrap(z, field)) for t, z in enumerate(za)],
        [NoiseBlock("B", t + 1, Matrix._wrap(z, field)) for t, z in enumerate(zb)],
        f,
        h,
    )


def check_lagrange_points(points: EvaluationPoints, R: int, T: int):
    if not points.lagrange_mode:
        raise ValidationError("Lagrange codes need evaluation points with betas")
    if len(points.betas) != R + T:
        raise ValidationError(f"need R+T={R + T} betas, got {len(points.betas)}")


def smm_lagrange_encode(
    A: Matrix,
    B: Matrix,
    tensor: BilinearTensor,
    T: int,
    points: EvaluationPoints,
    noise_seed=None,
    noise_A=None,
    noise_B=None,
) -> SMMShares:
    field = A.field
    if T < 1:
        raise ValidationError("T >= 1 is required (T=0 is not supported)")
    check_lagrange_points(points, tensor.R, T)
    spec = PartitionSpec(tensor.m, tensor.p, tensor.n)
    if A.cols != B.rows:
        raise ValidationError(f"dimension mismatch: {A.shape} @ {B.shape}")
    sa = block_stack(A, spec, "A")
    sb = block_stack(B, spec, "B")
    shape_a, shape_b = sa.shape[2:], sb.shape[2:]
    batch_a = encode_stack(tensor.coeffs_a(field), sa.reshape((-1,) + shape_a), field)
    batch_b = encode_stack(tensor.coeffs_b(field), sb.reshape((-1,) + shape_b), field)
    rng = _rng(noise_seed)
    za = _noise_array(field, noise_A, T, shape_a, rng)
    zb = _noise_array(field, noise_B, T, shape_b, rng)
    ea = lagrange_encode_stack(field, batch_a, za, points)
    eb = lagrange_encode_stack(field, batch_b, zb, points)
    M = interpolation_matrix(field, points.betas)
    f = MatrixPolynomial.from_stack(combine(field, M, np.concatenate([batch_a, za])), field)
    h = MatrixPolynomial.from_stack(combine(field, M, np.concatenate([batch_b, zb])), field)
    return SMMShares(
        [Matrix._wrap(x, field) for x in ea],
        [Matrix._wrap(x, field) for x in eb],
        [NoiseBlock("A", t + 1, Matrix._wrap(z, field)) for t, z in enumerate(za)],
        [NoiseBlock("B", t + 1, Matrix._wrap(z, field)) for t, z in enumerate(zb)],
        f,
        h,
    )


# -- decoding -------------------------------------------------------------------


@dataclass
class DecodePlan:
    """Everything the master needs to turn K responses into C."""

    mode: str  # "poly" or "lagrange"
    K: int
    points: EvaluationPoints
    m: int
    n: int
    exponent_map: list | None = None
    tensor: BilinearTensor | None = None

    @classmethod
    def for_poly(cls, assign: DegreeAssignment, points: EvaluationPoints) -> DecodePlan:
        c1 = verify_c1(assign)
        if not c1.ok:
            raise ValidationError(f"assignment violates C1: {c1.failure}")
        return cls("poly", assign.K, points, assign.m, assign.n, exponent_map=c1.exponent_map)

    @classmethod
    def for_lagrange(cls, tensor: BilinearTensor, T: int, points: EvaluationPoints) -> DecodePlan:
        check_lagrange_points(points, tensor.R, T)
        return cls("lagrange", 2 * tensor.R + 2 * T - 1, points, tensor.m, tensor.n, tensor=tensor)


def smm_decode(responses, plan: DecodePlan) -> Matrix:
    """Recover C from ``(worker_id, Matrix)`` pairs; worker ids are 1-based.

    The first K responses in the given order are used.
    """
    responses = list(responses)
    K = plan.K
    if len(responses) < K:
        raise BelowThresholdError(
            f"below recovery threshold: {len(responses)} responses supplied, K={K} required"
        )
    used = responses[:K]
    ids = [int(i) for i, _ in used]
    if len(set(ids)) != K:
        raise ValidationError("duplicate worker ids among responses")
    N = plan.points.N
    for i in ids:
        if not 1 <= i <= N:
            raise ValidationError(f"worker id {i} outside [1, {N}]")
    field = plan.points.field
    shape = used[0][1].shape
    for _, y in used:
        if y.shape != shape:
            raise ValidationError(f"inconsistent response dims: {y.shape} vs {shape}")
        if y.field != field:
            raise ValidationError("response field does not match the decode plan")
    xs = [plan.points.alphas[i - 1] for i in ids]
    Y = np.stack([y.data for _, y in used])
    m, n = plan.m, plan.n
    if plan.mode == "poly":
        M = interpolation_matrix(field, xs)
        rows = [plan.exponent_map[k][j] for k in range(m) for j in range(n)]
        blocks = combine(field, M[rows], Y)
    elif plan.mode == "lagrange":
        t = plan.tensor
        W = interpolation_weights(field, xs, plan.points.betas[: t.R])
        prods = combine(field, W, Y)
        blocks = combine(field, t.coeffs_c(field), prods)
    else:
        raise ValidationError(f"unknown decode mode {plan.mode!r}")
    grid = [[Matrix._wrap(blocks[k * n + j], field) for j in range(n)] for k in range(m)]
    return assemble(grid)


# -- thresholds -----------------------------------------------------------------


@dataclass
class ThresholdReport:
    K: int
    family: str
    inputs: dict
    candidates: dict = dc_field(default_factory=dict)


_FAMILY_ALIASES = {
    "poly-variant-1": "poly-v1",
    "poly-variant-2": "poly-v2",
    "poly-variant-3": "poly-v3",
    "v1": "poly-v1",
    "v2": "poly-v2",
    "v3": "poly-v3",
    "poly-min": "poly-min",
    "poly": "poly",
    "lagrange": "lagrange",
}


def recovery_threshold(
    family: str, m: int, p: int, n: int, T: int, R: int | None = None, assign=None
) -> ThresholdReport:
    """Closed-form recovery threshold.

    ``family`` is one of poly-v1, poly-v2, poly-v3, poly-min, poly (needs
    ``assign``) or lagrange (needs ``R``). poly-min breaks ties in V1, V2, V3
    order.
    """
    _check_params(m, p, n, T)
    fam = _FAMILY_ALIASES.get(str(family).lower())
    if fam is None:
        raise ValidationError(f"unknown code family {family!r}")
    inputs = {"m": m, "p": p, "n": n, "T": T, "R": R}
    if fam == "lagrange":
        if R is None:
            raise ValidationError("the lagrange family needs the bilinear rank R")
        if R < 1:
            raise ValidationError("bilinear rank R must be >= 1")
        return ThresholdReport(2 * R + 2 * T - 1, "lagrange", inputs)
    if fam == "poly":
        if assign is None:
            fam = "poly-min"
        else:
            return ThresholdReport(assign.K, "poly-explicit", inputs)
    if fam == "poly-min":
        cands = {f"poly-{v.lower()}": preset_threshold(v, m, p, n, T) for v in VARIANTS}
        best = min(cands, key=lambda k: cands[k])  # min keeps the first of equal values
        return ThresholdReport(cands[best], best, inputs, cands)
    v = fam.split("-")[1].upper()
    return ThresholdReport(preset_threshold(v, m, p, n, T), fam, inputs)
