import math

import numba
import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pdlp import linalg
from pdlp.linalg import (
    ShardedMatrix,
    dot,
    make_shard_plan,
    norm2,
    norm_inf,
    norm_sq,
    project_box,
    spmv,
    spmv_transpose,
    weighted_norm,
)


class TestShardPlan:
    def test_even_split(self):
        np.testing.assert_array_equal(make_shard_plan(10, 1, 4).sizes(), [3, 3, 2, 2])

    def test_empty_dimension(self):
        plan = make_shard_plan(0, 3)
        assert plan.num_shards == 12
        assert np.all(plan.sizes() == 0)

    def test_fewer_entries_than_shards(self):
        plan = make_shard_plan(7, 2, 4)
        assert plan.num_shards == 8
        np.testing.assert_array_equal(plan.sizes(), [1, 1, 1, 1, 1, 1, 1, 0])

    @given(st.integers(0, 5000), st.integers(1, 16), st.integers(1, 8))
    def test_partition_invariants(self, dim, threads, spt):
        plan = make_shard_plan(dim, threads, spt)
        b = plan.boundaries
        assert b[0] == 0 and b[-1] == dim
        assert np.all(np.diff(b) >= 0)
        sizes = plan.sizes()
        assert sizes.max() - sizes.min() <= 1
        assert np.all(np.diff(sizes) <= 0)  # earlier shards larger
        np.testing.assert_array_equal(b, make_shard_plan(dim, threads, spt).boundaries)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            make_shard_plan(-1)
        with pytest.raises(ValueError):
            make_shard_plan(3, 0)


class TestProducts:
    def test_identity(self):
        I = sp.identity(3, format="csr")
        np.testing.assert_array_equal(spmv(I, [1.0, 2.0, 3.0]), [1, 2, 3])
        np.testing.assert_array_equal(spmv_transpose(I.tocsc(), [4.0, 5.0, 6.0]), [4, 5, 6])

    def test_hand_products(self):
        A = sp.csr_matrix([[1.0, 1.0], [0.0, 2.0]])
        np.testing.assert_array_equal(spmv(A, [1.0, 1.0]), [2, 2])
        np.testing.assert_array_equal(spmv_transpose(A.tocsc(), [1.0, 1.0]), [1, 3])

    def test_zero_cases(self):
        A = sp.csr_matrix((3, 2))
        np.testing.assert_array_equal(spmv(A, [1.0, 2.0]), [0, 0, 0])
        B = sp.csr_matrix([[1.0, 1.0], [0.0, 2.0]])
        np.testing.assert_array_equal(spmv_transpose(B.tocsc(), [0.0, 0.0]), [0, 0])

    def test_plan_dimension_checked(self):
        A = sp.identity(3, format="csr")
        with pytest.raises(ValueError):
            spmv(A, np.ones(3), make_shard_plan(4))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 100_000), st.integers(1, 4), st.integers(1, 6))
    def test_sequential_equivalence(self, seed, threads, spt):
        rng = np.random.default_rng(seed)
        A = sp.random(37, 23, 0.2, random_state=seed, format="csr")
        x = rng.normal(size=23)
        y = rng.normal(size=37)
        one = spmv(A, x, make_shard_plan(37, 1, 1))
        many = spmv(A, x, make_shard_plan(37, threads, spt))
        assert np.array_equal(one, many)
        # each row sums in storage order, exactly like a plain loop
        ref = np.array([sum(A.data[p] * x[A.indices[p]] for p in range(A.indptr[i], A.indptr[i + 1]))
                        if A.indptr[i + 1] > A.indptr[i] else 0.0 for i in range(37)])
        assert np.array_equal(one, ref)
        C = A.tocsc()
        assert np.array_equal(spmv_transpose(C, y, make_shard_plan(23, 1, 1)),
                              spmv_transpose(C, y, make_shard_plan(23, threads, spt)))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 100_000))
    def test_adjoint_and_linearity_on_integers(self, seed):
        rng = np.random.default_rng(seed)
        A = sp.csr_matrix(rng.integers(-3, 4, size=(9, 7)).astype(float))
        x = rng.integers(-5, 6, 7).astype(float)
        x2 = rng.integers(-5, 6, 7).astype(float)
        y = rng.integers(-5, 6, 9).astype(float)
        assert dot(spmv(A, x), y) == dot(x, spmv_transpose(A.tocsc(), y))
        assert np.array_equal(spmv(A, 2 * x + 3 * x2), 2 * spmv(A, x) + 3 * spmv(A, x2))

    def test_sharded_matrix_matches_scipy(self):
        A = sp.random(50, 40, 0.1, random_state=3, format="csr")
        M = ShardedMatrix(A, threads=3, shards_per_thread=2)
        x = np.arange(40.0)
        y = np.arange(50.0)
        np.testing.assert_allclose(M.matvec(x), A @ x, rtol=1e-14)
        np.testing.assert_allclose(M.rmatvec(y), A.T @ y, rtol=1e-14)
        assert M.nnz == A.nnz
        assert M.max_abs() == pytest.approx(abs(A).max())


class TestReductions:
    def test_hand_values(self):
        assert dot([1.0, 2.0, 3.0], [4.0, 5.0, 6.0]) == 32.0
        assert norm_inf([-7.0, 3.0]) == 7.0
        assert dot([1.0, 2.0], [0.0, 0.0]) == 0.0
        assert norm_sq([3.0, 4.0]) == 25.0
        assert norm2([3.0, 4.0]) == 5.0
        assert norm_inf([]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            dot([1.0], [1.0, 2.0])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 100_000), st.integers(1, 8), st.integers(1, 8))
    def test_bit_identical_for_fixed_plan_across_thread_counts(self, seed, t1, t2):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=1001) * 10.0 ** rng.integers(-8, 8, 1001)
        b = rng.normal(size=1001)
        plan = make_shard_plan(1001, 4, 4)
        results = []
        for t in (t1, t2):
            linalg.set_threads(t)
            results.append((dot(a, b, plan), norm_sq(a, plan), norm_inf(a, plan)))
        linalg.set_threads(1)
        assert results[0] == results[1]

    def test_shard_order_sum(self):
        # the result equals summing per-shard partials left to right
        a = np.array([1e16, 1.0, -1e16, 1.0])
        plan = make_shard_plan(4, 2, 1)
        assert dot(a, np.ones(4), plan) == (1e16 + 1.0) + (-1e16 + 1.0)


class TestProjectionAndNorm:
    def test_inside_box(self):
        np.testing.assert_array_equal(project_box([0.5, 0.2], [0, 0], [1, 1]), [0.5, 0.2])

    def test_clamping(self):
        np.testing.assert_array_equal(project_box([-1.0, 5.0], [0, 0], [1, 1]), [0, 1])

    def test_infinite_bounds(self):
        np.testing.assert_array_equal(
            project_box([-1e300, 7.0], [-np.inf, -np.inf], [np.inf, np.inf]), [-1e300, 7.0])

    def test_weighted_norm(self):
        assert weighted_norm([3.0, 4.0], [0.0, 2.0], 4.0) == math.sqrt(101.0)
        assert weighted_norm([3.0], [4.0], 1.0) == 5.0
        assert weighted_norm([0.0], [0.0], 2.0) == 0.0
        with pytest.raises(ValueError):
            weighted_norm([1.0], [1.0], 0.0)


def test_thread_pool_has_room_for_four_workers():
    assert numba.config.NUMBA_NUM_THREADS >= 4
    assert linalg.set_threads(4) == 4
    linalg.set_threads(1)
