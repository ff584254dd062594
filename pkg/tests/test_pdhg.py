import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dual_set, pdhg_norm_sq, power_iteration_sigma_max
from pdlp.generate import generate_instance
from pdlp.pdhg import (
    AverageState,
    EmptyAverageError,
    NumericalError,
    PdhgOperator,
    Point,
    adaptive_step,
    initial_step_size,
    next_step_size,
    pdhg_step,
    step_size_limit,
    update_average,
)
from pdlp.problem import LpProblem

inf = np.inf


def reference_step(p, x, y, omega, eta):
    """Scalar loop version of the update, written straight from its definition."""
    A = p.matrix.toarray()
    tau, sigma = eta / omega, eta * omega
    xn = np.empty_like(x)
    for j in range(len(x)):
        g = p.objective[j] - sum(A[i, j] * y[i] for i in range(len(y)))
        xn[j] = min(max(x[j] - tau * g, p.var_lower[j]), p.var_upper[j])
    yn = np.empty_like(y)
    for i in range(len(y)):
        ext = sum(A[i, j] * (2 * xn[j] - x[j]) for j in range(len(x)))
        proj = min(max(y[i] / sigma - ext, -p.con_upper[i]), -p.con_lower[i])
        yn[i] = y[i] - sigma * ext - sigma * proj
    return xn, yn


def random_lp(seed, m=5, n=4):
    rng = np.random.default_rng(seed)
    A = sp.random(m, n, 0.6, random_state=seed, format="csr", data_rvs=rng.standard_normal)
    lo = np.where(rng.random(m) < 0.4, -inf, rng.normal(size=m))
    hi = np.where(rng.random(m) < 0.4, inf, np.where(np.isfinite(lo), lo, 0) + rng.random(m))
    vlo = np.where(rng.random(n) < 0.3, -inf, -rng.random(n))
    vhi = np.where(rng.random(n) < 0.3, inf, rng.random(n))
    return LpProblem(A, rng.normal(size=n), lo, hi, vlo, vhi)


class TestStep:
    def test_hand_step(self):
        p = LpProblem(sp.csr_matrix([[1.0]]), [1.0], [1.0], [1.0], [0.0], [inf])
        x, y = pdhg_step(p, [0.0], [0.0], omega=1.0, eta=0.5)
        assert x[0] == 0.0 and y[0] == 0.5

    def test_saddle_point_is_fixed(self, lp1):
        x, y = pdhg_step(lp1, [0.0, 1.0], [-2.0], omega=1.3, eta=0.4)
        np.testing.assert_array_equal(x, [0.0, 1.0])
        np.testing.assert_array_equal(y, [-2.0])

    def test_generated_optimum_is_fixed(self):
        inst = generate_instance("random-feasible", 8, 12, density=0.4, seed=3)
        x, y = pdhg_step(inst.problem, inst.x_star, inst.y_star, omega=1.0, eta=0.1)
        np.testing.assert_allclose(x, inst.x_star, atol=1e-12)
        np.testing.assert_allclose(y, inst.y_star, atol=1e-12)

    def test_free_rows_keep_dual_zero(self):
        p = LpProblem(sp.csr_matrix([[1.0, -2.0], [3.0, 0.5]]), [0, 0], [-inf, -inf], [inf, inf],
                      [-1, -1], [1, 1])
        x, y = pdhg_step(p, [0.3, -0.2], [0.0, 0.0], omega=2.0, eta=0.7)
        np.testing.assert_array_equal(y, [0.0, 0.0])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 100_000), st.floats(0.1, 10), st.floats(0.01, 2))
    def test_matches_reference_and_stays_in_y(self, seed, omega, eta):
        p = random_lp(seed)
        rng = np.random.default_rng(seed + 1)
        x = np.clip(rng.normal(size=p.num_vars), p.var_lower, p.var_upper)
        ylo, yhi = dual_set(p.con_lower, p.con_upper)
        y = np.clip(rng.normal(size=p.num_cons), ylo, yhi)
        got_x, got_y = pdhg_step(p, x, y, omega, eta)
        ref_x, ref_y = reference_step(p, x, y, omega, eta)
        np.testing.assert_allclose(got_x, ref_x, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(got_y, ref_y, rtol=1e-10, atol=1e-10)
        # exact membership, no tolerance
        assert np.all(got_y >= ylo) and np.all(got_y <= yhi)
        assert np.all(got_x >= p.var_lower) and np.all(got_x <= p.var_upper)

    def test_non_finite_signalled(self):
        p = LpProblem(sp.csr_matrix([[1e308]]), [1e308], [-inf], [inf], [-inf], [inf])
        with pytest.raises(NumericalError):
            pdhg_step(p, [0.0], [0.0], omega=1.0, eta=1e10)

    def test_two_products_per_step(self, lp1):
        op = PdhgOperator(lp1)
        z = op.point([0.2, 0.1], [-0.5])
        calls = {"mv": 0, "rmv": 0}
        mv, rmv = op.A.matvec, op.A.rmatvec

        def count_mv(*a, **kw):
            calls["mv"] += 1
            return mv(*a, **kw)

        def count_rmv(*a, **kw):
            calls["rmv"] += 1
            return rmv(*a, **kw)

        op.A.matvec, op.A.rmatvec = count_mv, count_rmv
        op.step(z, 1.0, 0.3, Point.empty(1, 2))
        assert calls == {"mv": 1, "rmv": 1}


class TestStepSize:
    def test_limit_formula(self):
        # omega-norm squared 2 split as omega*dx^2 + dy^2/omega with omega = 1
        assert step_size_limit(1.5, 0.5, 0.5, 1.0) == 2.0

    def test_nonpositive_curvature(self):
        assert step_size_limit(1.0, 1.0, -0.3, 1.0) == inf
        assert step_size_limit(1.0, 1.0, 0.0, 1.0) == inf

    def test_update_rule(self):
        expected = min((1 - 10 ** -0.3) * 1.0, (1 + 10 ** -0.6) * 1.0)
        assert next_step_size(1.0, 1.0, 9) == pytest.approx(expected, rel=1e-15)
        assert expected == pytest.approx(0.49881276, abs=1e-8)

    def test_first_iteration_not_zero(self):
        assert next_step_size(1.0, 1.0, 0) == next_step_size(1.0, 1.0, 1) > 0

    def test_growth_when_limit_is_infinite(self):
        assert next_step_size(inf, 2.0, 0) == pytest.approx(2.0 * (1 + 2 ** -0.6))

    def test_accepts_immediately_without_curvature(self):
        # c = 0, free rows: y never moves so the interaction is zero
        p = LpProblem(sp.csr_matrix([[1.0]]), [0.0], [-inf], [inf], [0.0], [1.0])
        (x, y), used, nxt = adaptive_step(p, [0.5], [0.0], 1.0, 3.0, k=5)
        assert used == 3.0 and nxt > used

    def test_retry_reduces_step(self):
        inst = generate_instance("random-feasible", 10, 15, density=0.4, seed=1)
        op = PdhgOperator(inst.problem, record_steps=True)
        z = op.point(np.zeros(15), np.zeros(10))
        used, _ = op.adaptive_step(z, 1.0, 1e3, 1, Point.empty(10, 15))
        assert len(op.trace) > 1 and op.trace[-1].accepted
        assert not any(r.accepted for r in op.trace[:-1])
        assert used < 1e3

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000))
    def test_limit_never_below_inverse_spectral_norm(self, seed):
        inst = generate_instance("random-feasible", 12, 20, density=0.3, seed=seed)
        p = inst.problem
        sigma_max = power_iteration_sigma_max(p.matrix)
        op = PdhgOperator(p, record_steps=True)
        z = op.point(np.zeros(20), np.zeros(12))
        out = Point.empty(12, 20)
        eta = 10.0 / sigma_max
        rng = np.random.default_rng(seed)
        for k in range(150):
            omega = float(np.exp(rng.normal()))
            _, eta = op.adaptive_step(z, omega, eta, k, out)
            z, out = out, z
        for rec in op.trace:
            assert rec.eta_bar >= (1 - 1e-9) / sigma_max
            if rec.accepted and rec.interaction > 0:
                assert rec.eta <= rec.dz_sq_omega / (2 * rec.interaction)

    def test_initial_step(self):
        A = sp.csr_matrix([[1.0, -4.0], [2.0, 0.0]])
        p = LpProblem(A, [0, 0], [0, 0], [1, 1], [0, 0], [1, 1])
        assert initial_step_size(p) == 0.25
        p0 = LpProblem(sp.csr_matrix((2, 2)), [0, 0], [0, 0], [1, 1], [0, 0], [1, 1])
        assert initial_step_size(p0) == 1.0


class TestAverage:
    def test_single_point(self):
        avg = update_average(AverageState.zeros(1, 2), np.array([1.0, 2.0]), np.array([3.0]), 0.7)
        x, y = avg.average()
        np.testing.assert_allclose(x, [1, 2], rtol=1e-15)
        np.testing.assert_allclose(y, [3], rtol=1e-15)

    def test_weighted(self):
        avg = AverageState.zeros(1, 1)
        update_average(avg, np.array([4.0]), np.array([0.0]), 1.0)
        update_average(avg, np.array([8.0]), np.array([4.0]), 3.0)
        x, y = avg.average()
        assert x[0] == 0.25 * 4 + 0.75 * 8 and y[0] == 3.0

    def test_empty_after_reset(self):
        avg = update_average(AverageState.zeros(1, 1), np.ones(1), np.ones(1), 1.0)
        avg.reset()
        with pytest.raises(EmptyAverageError):
            avg.average()

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            update_average(AverageState.zeros(1, 1), np.ones(1), np.ones(1), 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_fixed_step_distance_to_optimum_nonincreasing(seed):
    inst = generate_instance("random-feasible", 8, 12, density=0.3, seed=seed)
    p = inst.problem
    A = p.matrix.toarray()
    eta = 0.9 / power_iteration_sigma_max(p.matrix)
    op = PdhgOperator(p)
    z = op.point(np.zeros(12), np.zeros(8))
    out = Point.empty(8, 12)
    prev = pdhg_norm_sq(z.x - inst.x_star, z.y - inst.y_star, A, 1.0, eta)
    for _ in range(2000):
        op.step(z, 1.0, eta, out)
        z, out = out, z
        d = pdhg_norm_sq(z.x - inst.x_star, z.y - inst.y_star, A, 1.0, eta)
        assert d <= prev + 1e-12 * max(1.0, prev)
        prev = d
    assert math.sqrt(max(prev, 0.0)) < 1.0
