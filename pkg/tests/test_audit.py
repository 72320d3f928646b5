from fractions import Fraction

import pytest

from copmm.audit import (
    AuditConfig,
    CollusionSet,
    DistributionTable,
    check_lemma1_condition,
    exhaustive_privacy_audit,
    exhaustive_security_audit,
    noise_slots,
    structural_sweep,
)
from copmm.errors import EnumerationTooLargeError, ValidationError
from copmm.field import FieldConfig

Q = 2**31 - 1


def test_tv_distance_exact():
    a, b = DistributionTable(), DistributionTable()
    for k in "xxy":
        a.add(k)
    for k in "xyy":
        b.add(k)
    assert a.tv_distance(b) == Fraction(1, 3)
    assert a.tv_distance(a) == 0


def test_collusion_set_checks():
    with pytest.raises(ValidationError):
        CollusionSet((), 3)
    with pytest.raises(ValidationError):
        CollusionSet((4,), 3)


def test_lemma1_monomial_pass():
    rep = check_lemma1_condition(FieldConfig(Q), range(1, 11), 2, exponents=(4, 5))
    assert rep.ok and rep.subsets_checked == 45


def test_lemma1_T1_any_nonzero():
    F = FieldConfig(101)
    assert check_lemma1_condition(F, [3, 50, 77], 1, exponents=(7,)).ok


def test_lemma1_duplicate_points_witness():
    rep = check_lemma1_condition(FieldConfig(Q), [1, 2, 2, 4], 2, exponents=(4, 5))
    assert not rep.ok and rep.witness == [2, 3]


def test_lemma1_lagrange_cauchy():
    F = FieldConfig(Q)
    R, T, N = 7, 2, 10
    betas = list(range(1, R + T + 1))
    alphas = list(range(R + T + 1, R + T + N + 1))
    rep = check_lemma1_condition(F, alphas, T, betas=betas, basis_indices=range(R + 1, R + T + 1))
    assert rep.ok


def test_structural_sweep_all_pass():
    rows = structural_sweep(FieldConfig(Q), 10, 3)
    assert rows and all(r["ok"] for r in rows)
    assert {r["kind"] for r in rows} == {"monomial", "lagrange"}


@pytest.mark.parametrize("family", ["poly", "lagrange"])
def test_psmm_privacy_q5(family):
    cfg = AuditConfig(problem="PSMM", family=family, modulus=5, T=1, N=3, V=2)
    rep = exhaustive_privacy_audit(cfg, [2])
    assert rep.ok and rep.max_tv == 0


def test_privacy_mutation_detected():
    cfg = AuditConfig(problem="PSMM", family="poly", modulus=5, T=1, N=3, V=2)
    slot = [s for s in noise_slots(cfg) if s[0] == "z_B"][0]
    rep = exhaustive_privacy_audit(cfg, [2], zeroed=[slot])
    assert not rep.ok and rep.max_tv > 0


def test_fpmm_lagrange_privacy_q7():
    cfg = AuditConfig(problem="FPMM", family="lagrange", modulus=7, T=1, N=3, U=2, V=2, tensor="naive:1,1,1")
    rep = exhaustive_privacy_audit(cfg, [1])
    assert rep.ok and len(rep.tv) == 6


def test_security_q3():
    cfg = AuditConfig(problem="PSMM", family="poly", modulus=3, T=1, N=2, V=2)
    assert exhaustive_security_audit(cfg, [1]).max_tv == 0
    # two colluders against a single noise term see A
    assert exhaustive_security_audit(cfg, [1, 2]).max_tv > 0
    strong = AuditConfig(problem="PSMM", family="poly", modulus=3, T=2, N=2, V=1, variant="V3")
    assert exhaustive_security_audit(strong, [1]).max_tv == 0


def test_security_mutation_detected():
    cfg = AuditConfig(problem="PSMM", family="poly", modulus=5, T=1, N=3, V=2)
    slot = [s for s in noise_slots(cfg) if s[0] == "Z_A"][0]
    assert exhaustive_security_audit(cfg, [1], zeroed=[slot]).max_tv > 0


def test_enumeration_refused():
    cfg = AuditConfig(problem="PSMM", family="poly", modulus=101, m=2, p=2, n=2, lam=2, omega=2, gamma=2, T=2, N=4, V=2)
    with pytest.raises(EnumerationTooLargeError) as err:
        exhaustive_privacy_audit(cfg, [1])
    assert err.value.required > err.value.limit
