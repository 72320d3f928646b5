"""JSON run configurations for the command-line front end.

Example::

    {"problem": "PSMM", "family": "poly", "m": 2, "p": 2, "n": 2, "T": 2,
     "N": 17, "V": 2, "theta": 1, "modulus": 2147483647, "seed": 7,
     "variant": "V1", "lambda": 64, "omega": 64, "gamma": 64,
     "profiles": [{"id": 3, "behavior": "dropped"}]}

Matrices are generated from ``seed`` unless ``inputs`` names FQMX files
(``A``, ``B``) or library directories (``libA``, ``libB``). Profiles may list
only the non-prompt workers; the rest default to prompt.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .bilinear import builtin_tensor, load_tensor
from .errors import ValidationError
from .field import DEFAULT_MODULUS, FieldConfig
from .matrix import Matrix, PartitionSpec, read_fqmx
from .private import LibraryA, LibraryB, StrategyConfig, load_library
from .sim import Job, WorkerProfile, parse_profiles
from .smm import DegreeAssignment

_KNOWN = {
    "problem", "family", "m", "p", "n", "T", "N", "V", "U", "theta", "theta1", "theta2",
    "modulus", "seed", "tensor", "variant", "assignment", "profiles", "lambda", "omega",
    "gamma", "inputs",
}


def _int(obj, key, default=None, minimum=1):
    v = obj.get(key, default)
    if v is None:
        return None
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ValidationError(f"config field {key!r}={v!r} must be an integer >= {minimum}")
    return v


def _round_up(x: int, d: int) -> int:
    return -(-x // d) * d


def pad_matrix(mat: Matrix, rows: int, cols: int) -> Matrix:
    if (rows, cols) == mat.shape:
        return mat
    out = np.zeros((rows, cols), dtype=mat.field.dtype)
    out[: mat.rows, : mat.cols] = mat.data
    return Matrix._wrap(out, mat.field)


@dataclass
class RunConfig:
    problem: str
    family: str
    m: int
    p: int
    n: int
    T: int
    N: int | None
    V: int
    U: int
    theta: int
    theta1: int
    theta2: int
    modulus: int
    seed: int
    variant: str
    assignment: DegreeAssignment | None
    tensor: str | None
    profiles: list
    lam: int
    omega: int
    gamma: int
    inputs: dict = dc_field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def from_json(cls, obj: dict, base_dir=".") -> RunConfig:
        if not isinstance(obj, dict):
            raise ValidationError("run config must be a JSON object")
        unknown = set(obj) - _KNOWN
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        problem = str(obj.get("problem", "PSMM")).upper()
        if problem not in ("SMM", "PSMM", "FPMM"):
            raise ValidationError(f"problem must be SMM, PSMM or FPMM, got {problem!r}")
        family = str(obj.get("family", "poly")).lower()
        if family not in ("poly", "lagrange"):
            raise ValidationError(f"family must be poly or lagrange, got {family!r}")
        assignment = obj.get("assignment")
        if assignment is not None:
            assignment = DegreeAssignment.from_json(assignment)
        profiles = obj.get("profiles", [])
        if isinstance(profiles, str):
            profiles = json.loads((Path(base_dir) / profiles).read_text())
        profiles = parse_profiles(profiles)
        m, p, n = (_int(obj, k, 1) for k in ("m", "p", "n"))
        return cls(
            problem=problem,
            family=family,
            m=m,
            p=p,
            n=n,
            T=_int(obj, "T", 1),
            N=_int(obj, "N"),
            V=_int(obj, "V", 1),
            U=_int(obj, "U", 1),
            theta=_int(obj, "theta", 1),
            theta1=_int(obj, "theta1", 1),
            theta2=_int(obj, "theta2", 1),
            modulus=_int(obj, "modulus", DEFAULT_MODULUS, minimum=2),
            seed=_int(obj, "seed", 0, minimum=0),
            variant=str(obj.get("variant", "min")),
            assignment=assignment,
            tensor=obj.get("tensor"),
            profiles=profiles,
            lam=_int(obj, "lambda", 2 * m),
            omega=_int(obj, "omega", 2 * p),
            gamma=_int(obj, "gamma", 2 * n),
            inputs=dict(obj.get("inputs", {})),
            base_dir=Path(base_dir),
        )

    @classmethod
    def load(cls, path) -> RunConfig:
        path = Path(path)
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_json(obj, base_dir=path.parent)

    @property
    def field(self) -> FieldConfig:
        return FieldConfig(self.modulus)

    @property
    def spec(self) -> PartitionSpec:
        return PartitionSpec(self.m, self.p, self.n)

    def resolve_tensor(self):
        if self.tensor is None:
            return None
        path = self.base_dir / self.tensor
        if path.suffix == ".json" and path.exists():
            return load_tensor(path, self.field)
        return builtin_tensor(self.tensor)

    def strategy_config(self) -> StrategyConfig:
        return StrategyConfig(
            self.spec,
            self.T,
            N=self.N,
            field=self.field,
            variant=self.variant,
            assignment=self.assignment,
            tensor=self.resolve_tensor(),
            seed=self.seed,
        )

    def full_profiles(self, N: int) -> list[WorkerProfile]:
        given = {p.id: p for p in self.profiles}
        for wid in given:
            if not 1 <= wid <= N:
                raise ValidationError(f"profile id {wid} outside [1, {N}]")
        return [given.get(i, WorkerProfile(i)) for i in range(1, N + 1)]

    def _matrix(self, key, rows, cols, rng):
        if key in self.inputs:
            mat = read_fqmx(self.base_dir / self.inputs[key])
            if mat.field != self.field:
                raise ValidationError(f"input {key} is over F_{mat.field.q}, config uses F_{self.modulus}")
            return mat
        return Matrix.random(self.field, rows, cols, rng)

    def _library(self, key, count, rows, cols, rng, side):
        if key in self.inputs:
            # trivial partition here; the real one is checked after optional padding
            lib = load_library(self.base_dir / self.inputs[key], PartitionSpec(1, 1, 1), side)
            if lib.field != self.field:
                raise ValidationError(f"input {key} is over F_{lib.field.q}, config uses F_{self.modulus}")
            return list(lib.matrices)
        return [Matrix.random(self.field, rows, cols, rng) for _ in range(count)]

    def build_job(self, pad: bool = False):
        """Materialize inputs; returns (Job, oracle product, original C shape)."""
        rng = np.random.default_rng([self.seed, 1])
        spec = self.spec
        sc = self.strategy_config()
        lam, omega, gamma = self.lam, self.omega, self.gamma
        if self.problem == "FPMM":
            As = self._library("libA", self.U, lam, omega, rng, "A")
        else:
            As = [self._matrix("A", lam, omega, rng)]
        if self.problem == "SMM":
            Bs = [self._matrix("B", omega, gamma, rng)]
        else:
            Bs = self._library("libB", self.V, omega, gamma, rng, "B")
        lam, omega = As[0].shape
        gamma = Bs[0].shape[1]
        shape_c = (lam, gamma)
        if pad:
            L, W, G = _round_up(lam, spec.m), _round_up(omega, spec.p), _round_up(gamma, spec.n)
            As = [pad_matrix(a, L, W) for a in As]
            Bs = [pad_matrix(b, W, G) for b in Bs]
        if self.problem == "FPMM":
            libA = LibraryA(As, spec)
            libB = LibraryB(Bs, spec)
            _idx(self.theta1, libA.U, "theta1")
            _idx(self.theta2, libB.V, "theta2")
            job = Job("FPMM", self.family, sc, libA=libA, libB=libB, theta1=self.theta1, theta2=self.theta2)
            oracle = libA[self.theta1] @ libB[self.theta2]
        elif self.problem == "PSMM":
            libB = LibraryB(Bs, spec)
            _idx(self.theta, libB.V, "theta")
            spec.block_shape(As[0].shape, "A")
            job = Job("PSMM", self.family, sc, A=As[0], libB=libB, theta=self.theta)
            oracle = As[0] @ libB[self.theta]
        else:
            spec.block_shape(As[0].shape, "A")
            spec.block_shape(Bs[0].shape, "B")
            job = Job("SMM", self.family, sc, A=As[0], B=Bs[0])
            oracle = As[0] @ Bs[0]
        return job, oracle, shape_c


def _idx(value, upper, name):
    if not 1 <= value <= upper:
        raise ValidationError(f"{name}={value} out of range [1, {upper}]")
