"""Master/worker simulation with straggler injection.

Time is measured in integer latency units. Prompt workers finish at time 0,
``delayed(k)`` workers at time k, and dropped workers never finish. The
master decodes from the K earliest finishers, ties going to the lower id.
"""

from __future__ import annotations

import contextvars
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .costs import CostContext, CostReport, RunMetrics, cost_report  # noqa: F401
from .errors import InsufficientWorkersError, ValidationError
from .private import fpmm_run, psmm_run, smm_run

THREADS_ENV = "COPMM_THREADS"


@dataclass(frozen=True)
class WorkerProfile:
    id: int
    behavior: str = "prompt"  # prompt | delayed | dropped
    latency: int = 0

    def __post_init__(self):
        if not isinstance(self.id, int) or self.id < 1:
            raise ValidationError(f"worker id {self.id!r} must be a positive integer")
        if self.behavior not in ("prompt", "delayed", "dropped"):
            raise ValidationError(f"unknown worker behavior {self.behavior!r}")
        if self.behavior == "delayed" and (not isinstance(self.latency, int) or self.latency < 0):
            raise ValidationError("delayed workers need a non-negative integer latency")

    @property
    def dropped(self) -> bool:
        return self.behavior == "dropped"

    @property
    def finish_time(self) -> int | None:
        if self.dropped:
            return None
        return self.latency if self.behavior == "delayed" else 0

    def to_json(self):
        if self.behavior == "delayed":
            return {"id": self.id, "behavior": {"delayed": self.latency}}
        return {"id": self.id, "behavior": self.behavior}

    @classmethod
    def from_json(cls, obj) -> WorkerProfile:
        try:
            wid = obj["id"]
            beh = obj.get("behavior", "prompt")
        except (TypeError, KeyError):
            raise ValidationError(f"bad worker profile entry {obj!r}") from None
        if isinstance(beh, dict):
            if set(beh) != {"delayed"}:
                raise ValidationError(f"bad worker behavior {beh!r}")
            return cls(wid, "delayed", beh["delayed"])
        return cls(wid, beh)


def prompt_profiles(N: int) -> list[WorkerProfile]:
    return [WorkerProfile(i) for i in range(1, N + 1)]


def dropped_profiles(N: int, dropped) -> list[WorkerProfile]:
    gone = set(dropped)
    return [WorkerProfile(i, "dropped" if i in gone else "prompt") for i in range(1, N + 1)]


def load_profiles(path) -> list[WorkerProfile]:
    return parse_profiles(json.loads(Path(path).read_text()))


def parse_profiles(data) -> list[WorkerProfile]:
    if not isinstance(data, list):
        raise ValidationError("worker profiles must be a JSON list")
    return [WorkerProfile.from_json(x) for x in data]


def arrival_order(profiles) -> list[int]:
    """Ids of the workers that finish, earliest first, ties by lower id."""
    ids = [p.id for p in profiles]
    if len(set(ids)) != len(ids):
        raise ValidationError("worker profile ids must be unique")
    alive = [p for p in profiles if not p.dropped]
    return [p.id for p in sorted(alive, key=lambda p: (p.finish_time, p.id))]


def thread_limit() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV}={raw!r} must be an integer") from None
    return max(1, value)


def _threaded_map(threads: int):
    def run(fn, items):
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(contextvars.copy_context().run, fn, x) for x in items]
            return [f.result() for f in futures]

    return run


@dataclass
class Job:
    """Inputs of one simulated run; ``problem`` is SMM, PSMM or FPMM."""

    problem: str
    family: str
    config: object  # StrategyConfig
    A: object = None
    B: object = None
    libA: object = None
    libB: object = None
    theta: int = 1
    theta1: int = 1
    theta2: int = 1


def simulate(job: Job, profiles=None, threads: int | None = None):
    """Run ``job`` against the worker profiles; returns (StrategyRun, RunMetrics)."""
    res = job.config.resolve(job.family)
    if profiles is None:
        profiles = prompt_profiles(res.N)
    profiles = list(profiles)
    ids = sorted(p.id for p in profiles)
    if ids != list(range(1, res.N + 1)):
        raise ValidationError(f"profiles must cover worker ids 1..{res.N} exactly once")
    order = arrival_order(profiles)
    if len(order) < res.K:
        raise InsufficientWorkersError(
            f"insufficient responsive workers: {len(order)} of N={res.N} respond, "
            f"K={res.K} required"
        )
    threads = thread_limit() if threads is None else max(1, threads)
    map_fn = _threaded_map(threads) if threads > 1 else None
    kw = {"responders": order, "map_fn": map_fn}
    problem = job.problem.upper()
    if problem == "PSMM":
        run = psmm_run(job.A, job.libB, job.theta, job.family, job.config, **kw)
    elif problem == "FPMM":
        run = fpmm_run(job.libA, job.libB, job.theta1, job.theta2, job.family, job.config, **kw)
    elif problem == "SMM":
        run = smm_run(job.A, job.B, job.family, job.config, **kw)
    else:
        raise ValidationError(f"unknown problem {job.problem!r}; expected SMM, PSMM or FPMM")
    run.config["profiles"] = [p.to_json() for p in sorted(profiles, key=lambda p: p.id)]
    return run, run.metrics
