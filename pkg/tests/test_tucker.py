import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rail3d.errors import ContractError, ShapeError
from rail3d.tucker import (
    TuckerTensor3, block_max_abs, hadamard, hadamard_raw, hosvd, hosvd_dense, khatri_rao_t, kron3,
    matricize, mode_n_product, multi_mode_product, project_core, random_tucker, reconstruct,
    tensorize, tucker_sum, unvectorize, vectorize,
)

dims = st.integers(min_value=1, max_value=5)
seeds = st.integers(min_value=0, max_value=2 ** 31)


def test_matricize_column_major_oracle():
    t = np.arange(24.0).reshape((2, 3, 4), order="F")
    # frozen: entries are the column-major linear indices
    assert matricize(t, 0)[:, 0].tolist() == [0.0, 1.0]
    assert matricize(t, 1)[:, 0].tolist() == [0.0, 2.0, 4.0]
    assert matricize(t, 1)[:, 1].tolist() == [1.0, 3.0, 5.0]
    assert matricize(t, 2)[:, 1].tolist() == [1.0, 7.0, 13.0, 19.0]
    assert vectorize(t).tolist() == list(range(24))


def test_mode_product_loop_oracle(rng):
    t = rng.standard_normal((3, 4, 5))
    m = rng.standard_normal((2, 4))
    ref = np.zeros((3, 2, 5))
    for i in range(3):
        for j in range(2):
            for k in range(5):
                ref[i, j, k] = sum(m[j, q] * t[i, q, k] for q in range(4))
    assert np.allclose(mode_n_product(t, m, 1), ref, atol=1e-14)


def test_mode_product_rejects_bad_shapes(rng):
    with pytest.raises(ShapeError):
        mode_n_product(np.zeros((2, 3, 4)), np.zeros((2, 5)), 1)
    with pytest.raises(ContractError):
        mode_n_product(np.zeros((2, 3, 4)), np.zeros((2, 2)), 3)


@given(dims, dims, dims, st.integers(0, 2), seeds)
def test_matricize_roundtrip(a, b, c, n, seed):
    t = np.random.default_rng(seed).standard_normal((a, b, c))
    assert np.array_equal(tensorize(matricize(t, n), n, t.shape), t)
    assert np.array_equal(unvectorize(vectorize(t), t.shape), t)


@given(dims, dims, dims, seeds)
def test_vec_kron_identity(a, b, c, seed):
    # vec(X x1 A x2 B x3 C) = (C kron B kron A) vec(X)
    r = np.random.default_rng(seed)
    x = r.standard_normal((a, b, c))
    ma, mb, mc = r.standard_normal((2, a)), r.standard_normal((3, b)), r.standard_normal((2, c))
    lhs = vectorize(multi_mode_product(x, [ma, mb, mc]))
    rhs = np.kron(mc, np.kron(mb, ma)) @ vectorize(x)
    assert np.allclose(lhs, rhs, atol=1e-12)


@given(seeds)
def test_mode_products_commute_across_axes(seed):
    r = np.random.default_rng(seed)
    x = r.standard_normal((3, 4, 5))
    a, c = r.standard_normal((2, 3)), r.standard_normal((6, 5))
    one = mode_n_product(mode_n_product(x, a, 0), c, 2)
    two = mode_n_product(mode_n_product(x, c, 2), a, 0)
    assert np.allclose(one, two, atol=1e-13)


def test_tucker_validation():
    with pytest.raises(ContractError):
        TuckerTensor3(np.ones((2, 1, 1)), (np.ones((4, 2)), np.eye(3)[:, :1], np.eye(3)[:, :1]))
    with pytest.raises(ShapeError):
        TuckerTensor3(np.ones((2, 1, 1)), (np.eye(4)[:, :1],) * 3)


@given(st.tuples(dims, dims, dims), seeds)
def test_reconstruct_order_independent(r, seed):
    t = random_tucker(np.random.default_rng(seed), (6, 7, 5), r)
    assert np.allclose(reconstruct(t, (2, 0, 1)), t.full(), atol=1e-12)
    assert np.isclose(t.norm(), np.linalg.norm(t.full()))


def test_rank_one_and_zeros():
    t = TuckerTensor3.rank_one(2.0, ([1.0, 2.0], [3.0, 0.0, 1.0], [1.0]))
    assert np.allclose(t.full(), 2.0 * np.einsum("i,j,k->ijk", [1.0, 2.0], [3.0, 0.0, 1.0], [1.0]))
    z = TuckerTensor3.zeros((3, 4, 5))
    assert z.norm() == 0.0 and z.shape == (3, 4, 5)
    with pytest.raises(ContractError):
        TuckerTensor3.rank_one(1.0, ([0.0, 0.0], [1.0], [1.0]))


@given(seeds)
def test_tucker_sum_is_exact(seed):
    r = np.random.default_rng(seed)
    a = random_tucker(r, (8, 7, 6), (2, 3, 2))
    b = random_tucker(r, (8, 7, 6), (3, 1, 2))
    s = tucker_sum([(2.0, a.core, a.factors), (-0.5, b.core, b.factors)])
    assert np.allclose(s.full(), 2.0 * a.full() - 0.5 * b.full(), atol=1e-12)


def test_hosvd_exact_at_zero_tolerance(rng):
    t = rng.standard_normal((5, 6, 4))
    assert np.allclose(hosvd_dense(t, tol=0.0).full(), t, atol=1e-12 * np.linalg.norm(t))


def test_hosvd_recovers_low_rank(rng):
    t = random_tucker(rng, (10, 9, 8), (2, 3, 2))
    out = hosvd_dense(t.full(), tol=1e-10)
    assert out.mlrank == (2, 3, 2)
    assert np.linalg.norm(out.full() - t.full()) <= 1e-10 * t.norm()


def test_hosvd_argument_contract(rng):
    t = rng.standard_normal((3, 3, 3))
    with pytest.raises(ContractError):
        hosvd_dense(t)
    with pytest.raises(ContractError):
        hosvd_dense(t, tol=1e-3, rank=(1, 1, 1))
    with pytest.raises(ContractError):
        hosvd_dense(t, tol=-1.0)


@given(st.tuples(dims, dims, dims), st.floats(1e-4, 0.5), seeds)
def test_hosvd_tolerance_bound(r, eps, seed):
    # sequential truncation: total error <= sqrt(3) * eps * ||t||
    t = np.random.default_rng(seed).standard_normal((5, 6, 4))
    out = hosvd_dense(t, tol=eps)
    assert np.linalg.norm(out.full() - t) <= np.sqrt(3) * eps * np.linalg.norm(t) * (1 + 1e-12)


@given(st.tuples(dims, dims, dims), seeds)
def test_hosvd_of_tucker_matches_dense(r, seed):
    t = random_tucker(np.random.default_rng(seed), (7, 6, 5), (4, 4, 4))
    a = hosvd(t, rank=r).full()
    b = hosvd_dense(t.full(), rank=r).full()
    assert np.allclose(a, b, atol=1e-10)


def test_kron3_index_convention(rng):
    a = rng.standard_normal((2, 3, 2))
    b = rng.standard_normal((3, 2, 2))
    k = kron3(a, b)
    assert k.shape == (6, 6, 4)
    assert k[1 * 3 + 2, 2 * 2 + 1, 1 * 2 + 0] == a[1, 2, 1] * b[2, 1, 0]


def test_khatri_rao_rows(rng):
    a, b = rng.standard_normal((4, 2)), rng.standard_normal((4, 3))
    kr = khatri_rao_t(a, b)
    for n in range(4):
        assert np.allclose(kr[n], np.kron(a[n], b[n]))
    with pytest.raises(ShapeError):
        khatri_rao_t(a, rng.standard_normal((3, 3)))


@given(st.tuples(dims, dims, dims), st.tuples(dims, dims, dims), seeds)
def test_hadamard_matches_dense(ra, rb, seed):
    r = np.random.default_rng(seed)
    a = random_tucker(r, (9, 8, 7), ra)
    b = random_tucker(r, (9, 8, 7), rb)
    expect = a.full() * b.full()
    assert np.allclose(hadamard(a, b).full(), expect, atol=1e-12)
    core, facs = hadamard_raw(a, b)
    assert np.allclose(multi_mode_product(core, facs), expect, atol=1e-12)


def test_project_core_and_block_max(rng):
    t = random_tucker(rng, (20, 6, 35), (2, 2, 3))
    bases = (t.factors[0], None, t.factors[2])
    g = project_core(t.core, t.factors, bases)
    assert np.allclose(multi_mode_product(g, [t.factors[0], np.eye(6), t.factors[2]]), t.full(), atol=1e-12)
    assert np.isclose(block_max_abs(t, block=4), np.max(np.abs(t.full())))
