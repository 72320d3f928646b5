"""PSMM end to end: A stays hidden, the library index stays private.

Run with ``python3 demos/walkthrough.py``.
"""

import numpy as np

from copmm import FieldConfig, Job, LibraryB, Matrix, PartitionSpec, StrategyConfig, simulate
from copmm.audit import AuditConfig, exhaustive_privacy_audit
from copmm.sim import dropped_profiles

F = FieldConfig(2**31 - 1)
spec = PartitionSpec(2, 2, 2)
rng = np.random.default_rng(0)

A = Matrix.random(F, 8, 8, rng)
library = LibraryB([Matrix.random(F, 8, 8, rng) for _ in range(3)], spec)

for family in ("poly", "lagrange"):
    cfg = StrategyConfig(spec, T=2, field=F, seed=1)
    K = cfg.resolve(family).K
    cfg = StrategyConfig(spec, T=2, N=K + 2, field=F, seed=1)
    run, metrics = simulate(Job("PSMM", family, cfg, A=A, libB=library, theta=3), dropped_profiles(K + 2, [1, 5]))
    print(f"{family:8s} K={K} N={K + 2} decoded ok={run.C == A @ library[3]} P_u={run.cost.P_u} P_d={run.cost.P_d}")

# exhaustive check on a tiny instance: a colluding worker learns nothing about theta
rep = exhaustive_privacy_audit(AuditConfig(problem="PSMM", family="poly", modulus=5, N=3, V=2), [2])
print("privacy TV between theta=1 and theta=2:", rep.max_tv)
