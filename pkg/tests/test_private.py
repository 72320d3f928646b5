import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from copmm.bilinear import naive_tensor, strassen_tensor
from copmm.errors import CopmmError, ValidationError
from copmm.field import FieldConfig
from copmm.costs import CostContext, RunMetrics, cost_report
from copmm.matrix import Matrix, PartitionSpec
from copmm.poly import EvaluationPoints, lagrange_basis_eval
from copmm.private import (
    LibraryA,
    LibraryB,
    StrategyConfig,
    aligned_shares,
    fpmm_lagrange_queries,
    fpmm_poly_queries,
    fpmm_run,
    fpmm_worker_encode_A,
    load_library,
    psmm_lagrange_queries,
    psmm_poly_queries,
    psmm_run,
    psmm_worker_encode_B,
    query_size,
    save_library,
    smm_run,
)
from copmm.smm import DegreeAssignment, preset_assignment

Q = 2**31 - 1
F = FieldConfig(Q)


def lib_b(V, rows, cols, spec, seed=0):
    rng = np.random.default_rng(seed)
    return LibraryB([Matrix.random(F, rows, cols, rng) for _ in range(V)], spec)


def lib_a(U, rows, cols, spec, seed=1):
    rng = np.random.default_rng(seed)
    return LibraryA([Matrix.random(F, rows, cols, rng) for _ in range(U)], spec)


def test_poly_queries_zero_noise():
    a = preset_assignment("V1", 2, 2, 2, 1)
    pts = EvaluationPoints.default_poly(F, a.K)
    qs = psmm_poly_queries(2, a, 3, pts, noise=np.zeros((3, 2, 2, 1), dtype=np.int64))
    assert qs.b.shape == (a.K, 3, 2, 2)
    assert not qs.b[:, [0, 2]].any()
    for i, x in enumerate(pts.alphas):
        want = [[pow(x, e, Q) for e in row] for row in a.b]
        assert qs.b[i, 1].tolist() == want


def test_v1_222_T2_query_formula():
    a = preset_assignment("V1", 2, 2, 2, 2)
    pts = EvaluationPoints.default_poly(F, 17)
    rng = np.random.default_rng(9)
    z = F.random_array(rng, (2, 2, 2, 2))
    qs = psmm_poly_queries(1, a, 2, pts, noise=z)
    for i in (0, 5, 16):
        x = pts.alphas[i]
        for l in range(2):
            for j in range(2):
                want = (pow(x, a.b[l][j], Q) + int(z[0, l, j, 0]) * pow(x, 4, Q) + int(z[0, l, j, 1]) * pow(x, 5, Q)) % Q
                assert int(qs.b[i, 0, l, j]) == want
                other = (int(z[1, l, j, 0]) * pow(x, 4, Q) + int(z[1, l, j, 1]) * pow(x, 5, Q)) % Q
                assert int(qs.b[i, 1, l, j]) == other


def test_lagrange_queries_zero_noise_basis_values():
    t = strassen_tensor()
    T, V = 1, 2
    pts = EvaluationPoints.default_lagrange(F, 5, t.R, T)
    qs = psmm_lagrange_queries(1, t, V, T, pts, noise=np.zeros((V, t.R, T), dtype=np.int64))
    betas = [F(b) for b in pts.betas]
    for i, x in enumerate(pts.alphas):
        assert qs.b[i, 0].tolist() == [lagrange_basis_eval(betas, r, F(x)).value for r in range(1, t.R + 1)]
    assert not qs.b[:, 1].any()


def test_zero_noise_single_library_is_plain_encoding():
    spec = PartitionSpec(2, 2, 2)
    a = preset_assignment("V1", 2, 2, 2, 1)
    pts = EvaluationPoints.default_poly(F, a.K)
    lib = lib_b(1, 4, 4, spec)
    qs = psmm_poly_queries(1, a, 1, pts, noise=np.zeros((1, 2, 2, 1), dtype=np.int64))
    Bb = lib.blocks[0]
    for i, x in enumerate(pts.alphas):
        got = psmm_worker_encode_B(lib, qs.worker(i + 1)["b"])
        want = sum(int(pow(x, e, Q)) * Bb[k].astype(object) for k, e in enumerate(a.b_flat)) % Q
        assert got.data.tolist() == want.tolist()


def test_all_zero_library():
    spec = PartitionSpec(1, 2, 2)
    lib = LibraryB([Matrix.zeros(F, 4, 4)] * 2, spec)
    a = preset_assignment("V2", 1, 2, 2, 1)
    pts = EvaluationPoints.default_poly(F, a.K)
    qs = psmm_poly_queries(2, a, 2, pts, rng=0)
    assert psmm_worker_encode_B(lib, qs.worker(3)["b"]).is_zero()


@settings(max_examples=15, deadline=None)
@given(
    m=st.integers(1, 2), p=st.integers(1, 2), n=st.integers(1, 2), T=st.integers(1, 2),
    V=st.integers(1, 3), seed=st.integers(0, 999), lagrange=st.booleans(),
)
def test_alignment_identity_B(m, p, n, T, V, seed, lagrange):
    spec = PartitionSpec(m, p, n)
    lib = lib_b(V, 2 * p, 3 * n, spec, seed)
    theta = 1 + seed % V
    rng = np.random.default_rng(seed)
    if lagrange:
        t = naive_tensor(m, p, n)
        pts = EvaluationPoints.default_lagrange(F, 2 * t.R + 2 * T - 1, t.R, T)
        z = F.random_array(rng, (V, t.R, T))
        qs = psmm_lagrange_queries(theta, t, V, T, pts, noise=z)
        direct = aligned_shares(lib, theta, z, pts, tensor=t)
    else:
        t = None
        a = preset_assignment("V3", m, p, n, T)
        pts = EvaluationPoints.default_poly(F, a.K)
        z = F.random_array(rng, (V, p, n, T))
        qs = psmm_poly_queries(theta, a, V, pts, noise=z)
        direct = aligned_shares(lib, theta, z, pts, assign=a)
    for i in range(pts.N):
        assert psmm_worker_encode_B(lib, qs.worker(i + 1)["b"], t).data.tolist() == direct[i].tolist()


@pytest.mark.parametrize("lagrange", [False, True])
def test_alignment_identity_A(lagrange):
    spec = PartitionSpec(2, 2, 1)
    U, V, T = 3, 2, 2
    libA = lib_a(U, 4, 2, spec)
    rng = np.random.default_rng(3)
    if lagrange:
        t = naive_tensor(2, 2, 1)
        pts = EvaluationPoints.default_lagrange(F, 2 * t.R + 2 * T - 1, t.R, T)
        za, zb = F.random_array(rng, (U, t.R, T)), F.random_array(rng, (V, t.R, T))
        qs = fpmm_lagrange_queries(3, 1, t, U, V, T, pts, noise=(za, zb))
        direct = aligned_shares(libA, 3, za, pts, tensor=t)
    else:
        t = None
        a = preset_assignment("V1", 2, 2, 1, T)
        pts = EvaluationPoints.default_poly(F, a.K)
        za, zb = F.random_array(rng, (U, 2, 2, T)), F.random_array(rng, (V, 2, 1, T))
        qs = fpmm_poly_queries(3, 1, a, U, V, pts, noise=(za, zb))
        direct = aligned_shares(libA, 3, za, pts, assign=a)
        zero = fpmm_poly_queries(3, 1, a, U, V, pts, noise=(0 * za, 0 * zb))
        assert not zero.a[:, :2].any()
        x = pts.alphas[0]
        assert zero.a[0, 2].tolist() == [[pow(x, e, Q) for e in row] for row in a.a]
    for i in range(pts.N):
        assert fpmm_worker_encode_A(libA, qs.worker(i + 1)["a"], t).data.tolist() == direct[i].tolist()


def test_v1_222_T2_pipeline_64x64():
    spec = PartitionSpec(2, 2, 2)
    assign = DegreeAssignment([[0, 1], [6, 7]], [[1, 3], [0, 2]], [10, 11], [4, 5])
    rng = np.random.default_rng(0)
    A = Matrix.random(F, 64, 64, rng)
    lib = lib_b(2, 64, 64, spec, 5)
    cfg = StrategyConfig(spec, 2, N=17, assignment=assign, seed=1)
    run = psmm_run(A, lib, 1, "poly", cfg)
    assert run.K == 17 and run.C == A @ lib[1]
    assert run.cost.P_u == Fraction(17, 4) and run.cost.P_d == Fraction(17, 4)


@pytest.mark.parametrize("T", [1, 2])
def test_strassen_psmm(T):
    spec = PartitionSpec(2, 2, 2)
    rng = np.random.default_rng(T)
    A = Matrix.random(F, 4, 6, rng)
    lib = lib_b(3, 6, 8, spec)
    run = psmm_run(A, lib, 3, "lagrange", StrategyConfig(spec, T, tensor=strassen_tensor()))
    assert run.K == 13 + 2 * T and run.C == A @ lib[3]


def test_fpmm_boundaries():
    spec = PartitionSpec(1, 1, 1)
    libA, libB = lib_a(2, 3, 2, spec), lib_b(2, 2, 4, spec)
    run = fpmm_run(libA, libB, 2, 2, "poly", StrategyConfig(spec, 1, variant="V3"))
    assert run.K == 3 and run.C == libA[2] @ libB[2]
    assert run.cost.P_u is None and run.cost.upload_neglected
    spec = PartitionSpec(2, 2, 2)
    libA, libB = lib_a(2, 2, 2, spec), lib_b(3, 2, 2, spec)
    run = fpmm_run(libA, libB, 2, 3, "lagrange", StrategyConfig(spec, 1, tensor=strassen_tensor()))
    assert run.K == 15 and run.C == libA[2] @ libB[3]


def test_smm_run_both_families():
    spec = PartitionSpec(2, 1, 2)
    rng = np.random.default_rng(8)
    A, B = Matrix.random(F, 4, 3, rng), Matrix.random(F, 3, 2, rng)
    for fam in ("poly", "lagrange"):
        run = smm_run(A, B, fam, StrategyConfig(spec, 2))
        assert run.C == A @ B


def test_theta_out_of_range():
    spec = PartitionSpec(1, 1, 1)
    lib = lib_b(2, 2, 2, spec)
    A = Matrix.random(F, 2, 2, np.random.default_rng(0))
    with pytest.raises(ValidationError):
        psmm_run(A, lib, 3, "poly", StrategyConfig(spec, 1))


def test_library_dimension_checks():
    spec = PartitionSpec(2, 2, 2)
    with pytest.raises(ValidationError):
        LibraryB([Matrix.zeros(F, 4, 4), Matrix.zeros(F, 4, 2)], spec)
    with pytest.raises(ValidationError, match="does not divide"):
        LibraryB([Matrix.zeros(F, 3, 4)], spec)


def test_library_save_load(tmp_path):
    spec = PartitionSpec(2, 1, 2)
    lib = lib_b(3, 2, 4, spec)
    save_library(tmp_path / "lib", lib)
    back = load_library(tmp_path / "lib", spec)
    assert [back[v] == lib[v] for v in (1, 2, 3)] == [True] * 3


def test_query_size_closed_form():
    assert query_size("PSMM", "poly", 2, 2, 2, None, 3) == 12
    assert query_size("PSMM", "lagrange", 2, 2, 2, 7, 3) == 21
    assert query_size("FPMM", "poly", 2, 3, 1, None, 2, 4) == 2 * 3 + 4 * 6
    assert query_size("FPMM", "lagrange", 2, 2, 2, 7, 2, 4) == 42


def test_cost_report_rejects_inconsistent_counts():
    ctx = CostContext("PSMM", "poly", 2, 2, 2, 17, 17, 4, 4, 4)
    ok = RunMetrics(uploaded_symbols=17 * 4, downloaded_symbols=17 * 4)
    rep = cost_report(ok, ctx)
    assert rep.P_u == Fraction(17, 4) and rep.P_d == Fraction(17, 4)
    with pytest.raises(CopmmError):
        cost_report(RunMetrics(uploaded_symbols=1, downloaded_symbols=17 * 4), ctx)


def test_transcript_deterministic():
    spec = PartitionSpec(2, 2, 1)
    rng = np.random.default_rng(2)
    A = Matrix.random(F, 2, 2, rng)
    lib = lib_b(2, 2, 1, spec)
    runs = [psmm_run(A, lib, 2, "poly", StrategyConfig(spec, 1, seed=4)).to_json() for _ in range(2)]
    assert runs[0] == runs[1]
