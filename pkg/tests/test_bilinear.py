import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from copmm.bilinear import (
    BilinearTensor,
    apply_tensor,
    batch_encode_A,
    batch_encode_B,
    builtin_tensor,
    kronecker_compose,
    load_tensor,
    naive_tensor,
    recombine,
    save_tensor,
    strassen_tensor,
    verify_tensor,
)
from copmm.errors import ValidationError
from copmm.field import FieldConfig
from copmm.matrix import Matrix, PartitionSpec, assemble, partition

from conftest import int_matmul


def test_naive_shapes():
    t = naive_tensor(1, 1, 1)
    assert t.R == 1 and t.a.tolist() == [[[1]]] and t.c.tolist() == [[[1]]]
    assert naive_tensor(2, 2, 2).R == 8
    t = naive_tensor(3, 3, 3)
    assert t.R == 27 and verify_tensor(t, 20).passed


def test_strassen_rows():
    t = strassen_tensor()
    assert t.R == 7
    # A_1 = A_11 + A_22
    assert t.a[0].tolist() == [[1, 0], [0, 1]]
    # C_12 = M_3 + M_5 (1-based products)
    assert np.flatnonzero(t.c[:, 0, 1]).tolist() == [2, 4]
    assert t.c[[2, 4], 0, 1].tolist() == [1, 1]
    # C_21 = M_2 + M_4
    assert np.flatnonzero(t.c[:, 1, 0]).tolist() == [1, 3]


def test_strassen_symbolic_and_random():
    rep = verify_tensor(strassen_tensor(), 100, FieldConfig(2**31 - 1), rng=0)
    assert rep.passed and rep.symbolic_passed and rep.random_passed


def test_corrupted_tensor_has_witness():
    t = strassen_tensor()
    c = t.c.copy()
    c[0, 0, 0] += 1
    rep = verify_tensor(BilinearTensor(t.a, t.b, c, "broken"), 10, FieldConfig(101), rng=0)
    assert not rep.passed and rep.witness is not None


def test_naive_212_passes():
    assert verify_tensor(naive_tensor(2, 1, 2), 20).passed


def test_compose_with_unit_is_relabeling():
    t = strassen_tensor()
    u = kronecker_compose(naive_tensor(1, 1, 1), t)
    assert u.shape == t.shape and u.R == t.R
    assert verify_tensor(u, 10).passed


def test_strassen_squared():
    t = kronecker_compose(strassen_tensor(), strassen_tensor())
    assert t.shape == (4, 4, 4) and t.R == 49
    assert builtin_tensor("strassen^2") == t


def test_compose_rank_cap():
    with pytest.raises(ValidationError):
        kronecker_compose(strassen_tensor(), strassen_tensor(), max_rank=48)


@settings(max_examples=20, deadline=None)
@given(m=st.integers(1, 3), p=st.integers(1, 3), n=st.integers(1, 3), seed=st.integers(0, 999))
def test_apply_tensor_matches_product(m, p, n, seed):
    F = FieldConfig(101)
    rng = np.random.default_rng(seed)
    A, B = F.random_array(rng, (m, p)), F.random_array(rng, (p, n))
    assert apply_tensor(naive_tensor(m, p, n), F, A[None], B[None])[0].tolist() == int_matmul(A, B, 101)


def test_batch_encode_pipeline_q101():
    F = FieldConfig(101)
    rng = np.random.default_rng(2)
    t = strassen_tensor()
    spec = PartitionSpec(2, 2, 2)
    A, B = Matrix.random(F, 4, 6, rng), Matrix.random(F, 6, 2, rng)
    As = batch_encode_A(partition(A, spec, "A"), t)
    Bs = batch_encode_B(partition(B, spec, "B"), t)
    C = assemble(recombine([a @ b for a, b in zip(As, Bs)], t))
    assert C == A @ B


def test_identity_scalars_recombine_to_B():
    F = FieldConfig(101)
    t = strassen_tensor()
    spec = PartitionSpec(2, 2, 2)
    B = Matrix(F.asarray([[3, 1], [4, 1]]), F)
    As = batch_encode_A(partition(Matrix.identity(F, 2), spec, "A"), t)
    Bs = batch_encode_B(partition(B, spec, "B"), t)
    assert assemble(recombine([a @ b for a, b in zip(As, Bs)], t)) == B


def test_zero_blocks():
    F = FieldConfig(7)
    t = strassen_tensor()
    As = batch_encode_A(partition(Matrix.zeros(F, 2, 2), PartitionSpec(2, 2, 2), "A"), t)
    assert all(a.is_zero() for a in As)


def test_json_roundtrip(tmp_path):
    t = strassen_tensor()
    path = tmp_path / "s.json"
    save_tensor(path, t)
    assert load_tensor(path) == t
    obj = json.loads(path.read_text())
    obj["c"][0][0][0] = 5
    path.write_text(json.dumps(obj))
    with pytest.raises(ValidationError):
        load_tensor(path)


def test_bad_builtin_name():
    with pytest.raises(ValidationError):
        builtin_tensor("winograd")
    assert builtin_tensor("naive:2,1,3").shape == (2, 1, 3)
