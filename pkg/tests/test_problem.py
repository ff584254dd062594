import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pdlp.problem import (
    FeasibilityKind,
    InvalidProblemError,
    LpProblem,
    build_dual_feasibility,
    build_primal_feasibility,
    check,
    dual_box,
    dual_penalty,
    lagrangian,
    validate,
)

inf = np.inf


def one_var(lo, hi, a=1.0):
    return LpProblem(sp.csr_matrix([[a]]), [1.0], [-inf], [inf], [lo], [hi])


class TestValidate:
    def test_well_formed_box(self):
        assert validate(one_var(0.0, 1.0)) is None

    def test_var_bound_crossing(self):
        v = validate(one_var(2.0, 1.0))
        assert str(v) == "var bound crossing at index 0"

    def test_nan_matrix_entry(self):
        v = validate(one_var(0.0, 1.0, a=np.nan))
        assert v.invariant == "non-finite matrix entry"

    def test_con_crossing_reports_index(self):
        p = LpProblem(sp.csr_matrix(np.ones((3, 1))), [0.0], [0, 0, 5], [1, 1, 4], [0], [1])
        assert str(validate(p)) == "con bound crossing at index 2"

    def test_infinite_wrong_side(self):
        assert "lower bound is +inf" in str(validate(one_var(inf, inf)))
        assert "upper bound is -inf" in str(validate(one_var(-inf, -inf)))

    def test_nan_bound(self):
        assert "NaN" in str(validate(one_var(np.nan, 1.0)))

    def test_check_raises(self):
        with pytest.raises(InvalidProblemError, match="crossing"):
            check(one_var(2.0, 1.0))

    def test_length_mismatch(self):
        with pytest.raises(InvalidProblemError):
            LpProblem(sp.csr_matrix([[1.0, 2.0]]), [1.0], [0], [1], [0, 0], [1, 1])

    def test_layouts_agree_and_use_64bit_indices(self, lp1):
        assert (lp1.matrix != lp1.matrix_csc.tocsr()).nnz == 0
        assert lp1.matrix.indices.dtype == np.int64
        assert lp1.matrix_csc.indptr.dtype == np.int64

    def test_immutable_vectors(self, lp1):
        with pytest.raises(ValueError):
            lp1.objective[0] = 3.0


class TestDualPenalty:
    def test_zero_input(self):
        assert dual_penalty([0.0, 0.0], [-inf, 0], [inf, inf]) == 0.0

    def test_direct_evaluation(self):
        assert dual_penalty([2.0, -3.0], [-1.0, 0.0], [1.0, 4.0]) == 2.0

    def test_unbounded_direction(self):
        assert dual_penalty([1.0], [0.0], [inf]) == inf
        assert dual_penalty([-1.0], [-inf], [0.0]) == inf

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-3, 3), st.floats(0, 3)),
                    min_size=1, max_size=6),
           st.floats(0, 1))
    def test_convex(self, rows, t):
        y1 = np.array([r[0] for r in rows])
        y2 = np.array([r[1] for r in rows])
        lo = np.array([r[2] for r in rows])
        hi = lo + np.array([r[3] for r in rows])
        mix = dual_penalty(t * y1 + (1 - t) * y2, lo, hi)
        bound = t * dual_penalty(y1, lo, hi) + (1 - t) * dual_penalty(y2, lo, hi)
        assert mix <= bound + 1e-9 * (1 + abs(bound))


class TestLagrangian:
    def test_zero_objective_zero_dual(self):
        p = LpProblem(sp.csr_matrix([[1.0, 2.0]]), [0, 0], [0], [3], [0, 0], [1, 1])
        assert lagrangian(p, [0.5, 0.5], [0.0]) == 0.0

    def test_lp1_at_optimum(self, lp1):
        # c'x = -2; -y'Ax = 2; p(-2; -1, +inf) = (-1)(-2) = 2
        assert lagrangian(lp1, [0.0, 1.0], [-2.0]) == pytest.approx(-2.0, abs=1e-15)

    def test_sign_violation_is_infinite(self, lp1):
        # y > 0 is outside Y for a <= row: the penalty is +inf so L = -inf
        assert lagrangian(lp1, [0.0, 1.0], [1.0]) == -inf

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10_000))
    def test_finite_inside_y(self, seed):
        rng = np.random.default_rng(seed)
        m, n = 4, 3
        lo = np.where(rng.random(m) < 0.5, -inf, rng.normal(size=m))
        hi = np.where(rng.random(m) < 0.5, inf, np.maximum(lo, 0) + 1)
        hi = np.where(np.isinf(lo) & np.isinf(hi), 1.0, hi)
        p = LpProblem(sp.csr_matrix(rng.normal(size=(m, n))), rng.normal(size=n), lo, hi,
                      np.zeros(n), np.ones(n))
        ylo, yhi = dual_box(lo, hi)
        y = np.clip(rng.normal(size=m) * 3, ylo, yhi)
        assert np.isfinite(lagrangian(p, rng.random(n), y))


class TestDualBox:
    def test_cases(self):
        lo = np.array([-inf, 0.0, -inf, 1.0])
        hi = np.array([inf, inf, 2.0, 1.0])
        dlo, dhi = dual_box(lo, hi)
        np.testing.assert_array_equal(dlo, [0.0, 0.0, -inf, -inf])
        np.testing.assert_array_equal(dhi, [0.0, inf, 0.0, inf])


class TestFeasibilitySubproblems:
    def test_primal_zeroes_objective(self, lp1):
        sub = build_primal_feasibility(lp1)
        assert sub.kind is FeasibilityKind.PRIMAL and sub.embedding == "x"
        np.testing.assert_array_equal(sub.problem.objective, [0.0, 0.0])
        assert (sub.problem.matrix != lp1.matrix).nnz == 0
        np.testing.assert_array_equal(sub.problem.con_upper, lp1.con_upper)
        np.testing.assert_array_equal(sub.index, [0, 1])

    def test_primal_idempotent(self, lp1):
        once = build_primal_feasibility(lp1).problem
        twice = build_primal_feasibility(once).problem
        for name in ("objective", "con_lower", "con_upper", "var_lower", "var_upper"):
            np.testing.assert_array_equal(getattr(once, name), getattr(twice, name))

    def test_dual_lp1(self, lp1):
        sub = build_dual_feasibility(lp1)
        q = sub.problem
        assert sub.kind is FeasibilityKind.DUAL and sub.embedding == "y"
        assert q.num_vars == 1 and q.num_cons == 2
        np.testing.assert_array_equal(q.var_lower, [-inf])
        np.testing.assert_array_equal(q.var_upper, [0.0])
        np.testing.assert_array_equal(q.con_lower, [-inf, -inf])
        np.testing.assert_array_equal(q.con_upper, [-1.0, -2.0])
        np.testing.assert_array_equal(q.matrix.toarray(), [[1.0], [1.0]])
        np.testing.assert_array_equal(q.objective, [0.0])
        # y = -2 is feasible
        ay = q.matrix @ np.array([-2.0])
        assert np.all(ay <= q.con_upper)

    def test_dual_doubly_bounded_rows_free(self):
        p = LpProblem(sp.csr_matrix([[1.0, 2.0]]), [1, 1], [0], [1], [0, -1], [1, 1])
        q = build_dual_feasibility(p).problem
        np.testing.assert_array_equal(q.con_lower, [-inf, -inf])
        np.testing.assert_array_equal(q.con_upper, [inf, inf])

    def test_dual_free_variable_gives_equality(self):
        p = LpProblem(sp.csr_matrix([[1.0, 2.0]]), [3, 1], [0], [1], [-inf, 0], [inf, 1])
        q = build_dual_feasibility(p).problem
        assert q.con_lower[0] == q.con_upper[0] == 3.0

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10_000))
    def test_dual_subproblem_validates(self, seed):
        rng = np.random.default_rng(seed)
        m, n = 3, 4
        vlo = np.where(rng.random(n) < 0.5, -inf, 0.0)
        vhi = np.where(rng.random(n) < 0.5, inf, 1.0)
        clo = np.where(rng.random(m) < 0.5, -inf, -1.0)
        chi = np.where(rng.random(m) < 0.5, inf, 1.0)
        p = LpProblem(sp.random(m, n, 0.5, random_state=seed, format="csr"),
                      rng.normal(size=n), clo, chi, vlo, vhi)
        q = build_dual_feasibility(p).problem
        assert validate(q) is None
        assert np.all(q.objective == 0)
        assert (q.matrix != p.matrix.T.tocsr()).nnz == 0
