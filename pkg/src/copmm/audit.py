"""Executable security and privacy checks.

Two mechanisms:

* structural: invertibility of the T x T noise-coefficient matrices seen by
  every T-subset of workers (monomial noise, or Lagrange noise basis with
  its Cauchy-type factorization), valid at any scale;
* exhaustive: enumerate every value of the randomness on a tiny instance,
  tabulate the colluders' complete view, and compare the tables across
  secrets by total-variation distance, valid only at tiny scale.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .bilinear import builtin_tensor
from .errors import EnumerationTooLargeError, ValidationError
from .field import FieldConfig, det_mod
from .matrix import Matrix, PartitionSpec
from .private import (
    LibraryA,
    LibraryB,
    StrategyConfig,
    _a_side_encode,
    fpmm_lagrange_queries,
    fpmm_poly_queries,
    psmm_lagrange_queries,
    psmm_poly_queries,
    worker_encode,
)
from .smm import VARIANTS, preset_assignment, t_subsets

ENUMERATION_LIMIT = 10**7


# -- colluders and distributions ------------------------------------------------


@dataclass(frozen=True)
class CollusionSet:
    """Worker ids (1-based) pooling their views."""

    ids: tuple
    N: int

    def __post_init__(self):
        ids = tuple(sorted(int(i) for i in self.ids))
        object.__setattr__(self, "ids", ids)
        if not ids:
            raise ValidationError("a collusion set needs at least one worker")
        if len(set(ids)) != len(ids):
            raise ValidationError("collusion set ids must be distinct")
        if ids[0] < 1 or ids[-1] > self.N:
            raise ValidationError(f"collusion set {ids} is not a subset of [1, {self.N}]")

    @property
    def size(self) -> int:
        return len(self.ids)


class DistributionTable:
    """Counts of canonical view keys over the enumerated randomness."""

    def __init__(self):
        self.counts: Counter = Counter()

    def add(self, key: str) -> None:
        self.counts[key] += 1

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def tv_distance(self, other: DistributionTable) -> Fraction:
        n1, n2 = self.total, other.total
        keys = set(self.counts) | set(other.counts)
        diff = sum(abs(Fraction(self.counts[k], n1) - Fraction(other.counts[k], n2)) for k in keys)
        return diff / 2


def canonical_key(sections) -> str:
    """``name=v1,v2,...`` sections joined by ``;`` in the given order."""
    parts = []
    for name, arr in sections:
        flat = np.asarray(arr).ravel()
        parts.append(name + "=" + ",".join(str(int(v)) for v in flat))
    return ";".join(parts)


# -- structural checks ----------------------------------------------------------


@dataclass
class Lemma1Report:
    ok: bool
    mode: str
    T: int
    subsets_checked: int
    witness: list | None = None
    structure: dict = dc_field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "mode": self.mode,
            "T": self.T,
            "subsets_checked": self.subsets_checked,
            "witness": self.witness,
            "structure": self.structure,
        }


def _lagrange_value(nodes, k: int, x: int, q: int) -> int:
    num = den = 1
    for j, b in enumerate(nodes):
        if j != k:
            num = num * (x - b) % q
            den = den * (nodes[k] - b) % q
    return num * pow(den, -1, q) % q if den else 0


def _cauchy_structure(field: FieldConfig, alphas, betas, noise_pos) -> tuple[bool, dict]:
    """Check the factorization ``L_k(x) = v_k(x) f_k(x)`` on the worker points.

    ``v_k`` runs over the non-noise nodes, ``f_k`` is the Lagrange basis on the
    noise nodes alone. With every alpha outside the nodes the remaining
    matrix is a scaled Cauchy matrix ``1 / (alpha_i - beta_k)``, hence all of
    its square submatrices are invertible.
    """
    q = field.q
    noise_nodes = [betas[k] for k in noise_pos]
    other = [b for j, b in enumerate(betas) if j not in set(noise_pos)]
    factor_ok = True
    for a in alphas:
        for idx, k in enumerate(noise_pos):
            v = 1
            for b in other:
                v = v * (a - b) * pow((betas[k] - b) % q, -1, q) % q
            f = _lagrange_value(noise_nodes, idx, a, q)
            if v * f % q != _lagrange_value(betas, k, a, q):
                factor_ok = False
    outside = all(a % q not in {b % q for b in betas} for a in alphas)
    distinct = len(set(a % q for a in alphas)) == len(alphas) and len(set(betas)) == len(betas)
    return factor_ok and outside and distinct, {
        "factorization": factor_ok,
        "alphas_outside_betas": outside,
        "points_distinct": distinct,
    }


def check_lemma1_condition(
    field: FieldConfig,
    alphas,
    T: int,
    exponents=None,
    betas=None,
    basis_indices=None,
    exhaustive: bool = True,
    samples: int = 1000,
    rng=None,
) -> Lemma1Report:
    """Every T-subset of workers must see an invertible noise-coefficient matrix.

    Give either monomial ``exponents`` (length T) or Lagrange ``betas`` with
    1-based ``basis_indices`` of the T noise basis functions. Failure reports
    the first singular subset (1-based worker ids) as the witness.
    """
    q = field.q
    alphas = [int(a) % q for a in alphas]
    N = len(alphas)
    if T < 1 or T > N:
        raise ValidationError(f"need 1 <= T <= N, got T={T}, N={N}")
    if exponents is not None:
        exps = [int(e) for e in exponents]
        if len(exps) != T:
            raise ValidationError(f"need T={T} exponents, got {len(exps)}")
        if 0 in alphas:
            raise ValidationError("monomial noise functions need nonzero alphas")
        rows = [[pow(a, e, q) for e in exps] for a in alphas]
        mode, structure = "monomial", {}
    elif betas is not None and basis_indices is not None:
        betas = [int(b) % q for b in betas]
        pos = [int(k) - 1 for k in basis_indices]
        if len(pos) != T or any(not 0 <= k < len(betas) for k in pos):
            raise ValidationError(f"need T={T} basis indices in [1, {len(betas)}]")
        if len(set(betas)) != len(betas):
            raise ValidationError("betas must be pairwise distinct")
        rows = [[_lagrange_value(betas, k, a, q) for k in pos] for a in alphas]
        mode = "lagrange"
        _, structure = _cauchy_structure(field, alphas, betas, pos)
    else:
        raise ValidationError("give exponents, or betas with basis_indices")
    ex = exhaustive and math.comb(N, T) <= 200_000
    structure["enumeration"] = "exhaustive" if ex else "sampled"
    checked = 0
    for sub in t_subsets(N, T, ex, samples, rng):
        checked += 1
        if det_mod([rows[i] for i in sub], q) == 0:
            return Lemma1Report(False, mode, T, checked, [i + 1 for i in sub], structure)
    ok = True
    if mode == "lagrange":
        ok = all(v for k, v in structure.items() if k != "enumeration")
    return Lemma1Report(ok, mode, T, checked, None, structure)


def structural_sweep(field: FieldConfig, N_max: int = 10, T_max: int = 3, ranks=(1, 2, 4, 7, 8)) -> list[dict]:
    """Noise-invertibility checks for preset exponents and default Lagrange schedules."""
    out = []
    seen = set()
    for T in range(1, T_max + 1):
        for N in range(T, N_max + 1):
            for m, p, n in itertools.product((1, 2, 3), repeat=3):
                for v in VARIANTS:
                    a = preset_assignment(v, m, p, n, T)
                    for side, exps in (("c", a.c), ("d", a.d)):
                        key = (N, T, exps)
                        if key in seen:
                            continue
                        seen.add(key)
                        rep = check_lemma1_condition(field, range(1, N + 1), T, exponents=exps)
                        out.append({"kind": "monomial", "N": N, "T": T, "exponents": list(exps), "ok": rep.ok})
            for R in ranks:
                if R + T + N > field.q:
                    continue
                betas = list(range(1, R + T + 1))
                alphas = list(range(R + T + 1, R + T + N + 1))
                rep = check_lemma1_condition(
                    field, alphas, T, betas=betas, basis_indices=range(R + 1, R + T + 1)
                )
                out.append({"kind": "lagrange", "N": N, "T": T, "R": R, "ok": rep.ok})
    return out


# -- tiny instances -------------------------------------------------------------


@dataclass
class AuditConfig:
    """A tiny instance for exhaustive enumeration.

    Library matrices and the fixed A are drawn from ``seed`` unless given.
    """

    problem: str = "PSMM"
    family: str = "poly"
    modulus: int = 5
    m: int = 1
    p: int = 1
    n: int = 1
    lam: int = 1
    omega: int = 1
    gamma: int = 1
    T: int = 1
    N: int = 3
    V: int = 2
    U: int = 2
    variant: str = "min"
    tensor: str | None = None
    seed: int = 0
    A: list | None = None
    libA: list | None = None
    libB: list | None = None

    def __post_init__(self):
        self.problem = self.problem.upper()
        if self.problem not in ("PSMM", "FPMM"):
            raise ValidationError(f"audit problem must be PSMM or FPMM, got {self.problem!r}")
        if self.family not in ("poly", "lagrange"):
            raise ValidationError(f"audit family must be poly or lagrange, got {self.family!r}")

    @property
    def field(self) -> FieldConfig:
        return FieldConfig(self.modulus)

    @property
    def spec(self) -> PartitionSpec:
        return PartitionSpec(self.m, self.p, self.n)

    def strategy_config(self) -> StrategyConfig:
        tensor = builtin_tensor(self.tensor) if self.tensor else None
        return StrategyConfig(
            self.spec, self.T, N=self.N, field=self.field, variant=self.variant, tensor=tensor, seed=self.seed
        )

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        return out


class _Instance:
    """Resolved tiny instance plus helpers mapping noise vectors to views."""

    def __init__(self, cfg: AuditConfig):
        self.cfg = cfg
        self.field = cfg.field
        self.spec = cfg.spec
        self.sc = cfg.strategy_config()
        self.res = self.sc.resolve(cfg.family)
        rng = np.random.default_rng(cfg.seed)
        F = self.field
        if cfg.libB is not None:
            self.libB = LibraryB([Matrix(x, F) for x in cfg.libB], self.spec)
        else:
            self.libB = LibraryB([Matrix.random(F, cfg.omega, cfg.gamma, rng) for _ in range(cfg.V)], self.spec)
        self.libA = None
        if cfg.problem == "FPMM":
            if cfg.libA is not None:
                self.libA = LibraryA([Matrix(x, F) for x in cfg.libA], self.spec)
            else:
                self.libA = LibraryA([Matrix.random(F, cfg.lam, cfg.omega, rng) for _ in range(cfg.U)], self.spec)
        self.A = Matrix(cfg.A, F) if cfg.A is not None else Matrix.random(F, cfg.lam, cfg.omega, rng)

    @property
    def R(self) -> int | None:
        return self.res.tensor.R if self.res.tensor is not None else None

    def slot_layout(self) -> list[tuple[str, tuple]]:
        c, T = self.cfg, self.cfg.T
        h_a, w_a = c.lam // c.m, c.omega // c.p
        per_b = (c.p, c.n) if c.family == "poly" else (self.R,)
        per_a = (c.m, c.p) if c.family == "poly" else (self.R,)
        V = len(self.libB)
        if c.problem == "PSMM":
            return [("Z_A", (T, h_a, w_a)), ("z_B", (V,) + per_b + (T,))]
        U = len(self.libA)
        return [("z_A", (U,) + per_a + (T,)), ("z_B", (V,) + per_b + (T,))]

    def slots(self) -> list[tuple[str, tuple]]:
        out = []
        for name, shape in self.slot_layout():
            for idx in itertools.product(*(range(s) for s in shape)):
                out.append((name, idx))
        return out

    def split(self, values) -> dict:
        out = {}
        pos = 0
        for name, shape in self.slot_layout():
            size = int(np.prod(shape))
            out[name] = np.asarray(values[pos : pos + size], dtype=np.int64).reshape(shape)
            pos += size
        return out

    def view(self, secret, noise: dict, colluders: CollusionSet) -> str:
        F, res, c = self.field, self.res, self.cfg
        tensor = res.tensor
        sections = []
        if c.problem == "PSMM":
            theta, A = secret
            V = len(self.libB)
            if c.family == "poly":
                qs = psmm_poly_queries(theta, res.assign, V, res.points, noise=noise["z_B"])
            else:
                qs = psmm_lagrange_queries(theta, tensor, V, c.T, res.points, noise=noise["z_B"])
            shares = _a_side_encode(F, A, res, self.spec, noise["Z_A"])
            for i in colluders.ids:
                b_i = worker_encode(self.libB, qs.worker(i)["b"], tensor)
                y = F.matmul(shares[i - 1], b_i.data)
                sections += [(f"Q{i}", qs.b[i - 1]), (f"A{i}", shares[i - 1]), (f"Y{i}", y)]
        else:
            theta1, theta2 = secret
            U, V = len(self.libA), len(self.libB)
            nz = (noise["z_A"], noise["z_B"])
            if c.family == "poly":
                qs = fpmm_poly_queries(theta1, theta2, res.assign, U, V, res.points, noise=nz)
            else:
                qs = fpmm_lagrange_queries(theta1, theta2, tensor, U, V, c.T, res.points, noise=nz)
            for i in colluders.ids:
                qi = qs.worker(i)
                a_i = worker_encode(self.libA, qi["a"], tensor)
                b_i = worker_encode(self.libB, qi["b"], tensor)
                y = F.matmul(a_i.data, b_i.data)
                sections += [(f"QA{i}", qi["a"]), (f"QB{i}", qi["b"]), (f"Y{i}", y)]
        return canonical_key(sections)


def noise_slots(cfg: AuditConfig) -> list[tuple[str, tuple]]:
    """Every individual noise scalar of the instance, as (array name, index)."""
    return _Instance(cfg).slots()


@dataclass
class AuditReport:
    mode: str
    config: dict
    colluders: list
    space_size: int
    tv: dict
    zeroed: list
    ok: bool

    @property
    def max_tv(self) -> Fraction:
        return max((Fraction(v) for v in self.tv.values()), default=Fraction(0))

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "config": self.config,
            "colluders": self.colluders,
            "space_size": self.space_size,
            "tv": self.tv,
            "zeroed": self.zeroed,
            "ok": self.ok,
        }


def _enumerate(inst: _Instance, secrets, colluders: CollusionSet, zeroed, extra_states: int = 1):
    slots = inst.slots()
    zeroed = {(name, tuple(idx)) for name, idx in zeroed}
    unknown = zeroed - set(slots)
    if unknown:
        raise ValidationError(f"unknown noise slots {sorted(unknown)}")
    free = [k for k, s in enumerate(slots) if s not in zeroed]
    q = inst.field.q
    space = q ** len(free)
    if space * extra_states > ENUMERATION_LIMIT:
        raise EnumerationTooLargeError(space * extra_states, ENUMERATION_LIMIT)
    tables = []
    values = [0] * len(slots)
    for secret in secrets:
        table = DistributionTable()
        for state in itertools.product(range(q), repeat=len(free)):
            for k, v in zip(free, state):
                values[k] = v
            table.add(inst.view(secret, inst.split(values), colluders))
        tables.append(table)
    return tables, space


def _pairwise_tv(secrets, tables, label) -> dict:
    out = {}
    for i, j in itertools.combinations(range(len(secrets)), 2):
        out[f"{label(secrets[i])}|{label(secrets[j])}"] = str(tables[i].tv_distance(tables[j]))
    return out


def _collusion(cfg: AuditConfig, colluders) -> CollusionSet:
    if isinstance(colluders, CollusionSet):
        return colluders
    return CollusionSet(tuple(colluders), cfg.N)


def exhaustive_privacy_audit(cfg: AuditConfig, colluders, zeroed=()) -> AuditReport:
    """TV distance between colluder-view distributions for every pair of indices.

    ``zeroed`` lists noise slots (see :func:`noise_slots`) forced to zero, to
    test that the audit notices a weakened scheme.
    """
    inst = _Instance(cfg)
    col = _collusion(cfg, colluders)
    if cfg.problem == "PSMM":
        secrets = [(theta, inst.A) for theta in range(1, len(inst.libB) + 1)]
        label = lambda s: str(s[0])  # noqa: E731
    else:
        secrets = list(itertools.product(range(1, len(inst.libA) + 1), range(1, len(inst.libB) + 1)))
        label = lambda s: f"{s[0]},{s[1]}"  # noqa: E731
    tables, space = _enumerate(inst, secrets, col, zeroed, len(secrets))
    tv = _pairwise_tv(secrets, tables, label)
    ok = all(Fraction(v) == 0 for v in tv.values())
    return AuditReport("privacy", cfg.to_json(), list(col.ids), space, tv, [[n, list(i)] for n, i in zeroed], ok)


def exhaustive_security_audit(cfg: AuditConfig, colluders, zeroed=(), theta: int = 1) -> AuditReport:
    """TV distance between colluder-view distributions for every value of A."""
    if cfg.problem != "PSMM":
        raise ValidationError("the security audit applies to PSMM (A is the secret input)")
    inst = _Instance(cfg)
    col = _collusion(cfg, colluders)
    F = inst.field
    q = F.q
    cells = cfg.lam * cfg.omega
    secrets = []
    for vals in itertools.product(range(q), repeat=cells):
        secrets.append((theta, Matrix(np.array(vals, dtype=np.int64).reshape(cfg.lam, cfg.omega), F)))
    tables, space = _enumerate(inst, secrets, col, zeroed, len(secrets))
    tv = _pairwise_tv(secrets, tables, lambda s: "A=" + ",".join(str(v) for v in s[1].data.ravel()))
    ok = all(Fraction(v) == 0 for v in tv.values())
    return AuditReport("security", cfg.to_json(), list(col.ids), space, tv, [[n, list(i)] for n, i in zeroed], ok)
